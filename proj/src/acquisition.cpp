#include "optimice/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

namespace optimice {

namespace {

constexpr double kMinDenominator = 1e-12;

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& points, std::span<const std::size_t> idx)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), points.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

// Conditional variances of each remaining candidate given all the other
// remaining candidates, under K_G + nugget I. With P = (K_U + nugget I)^{-1},
// 1 / P_xx = 1 + nugget - k_x^T (K_{U\x} + nugget I)^{-1} k_x, so one inverse
// diagonal yields every denominator. Removing a candidate is a rank-one
// downdate of that inverse.
class RestConditioning {
public:
    RestConditioning(const KernelConfig& kernel, const Eigen::MatrixXd& points, double nugget)
        : nugget_(nugget), llt_(kernel_matrix(kernel, points, nugget)), active_(points.rows(), true)
    {
        if (llt_.info() != Eigen::Success)
            throw NumericalError("MICE: candidate correlation matrix with nugget " + format_double(nugget)
                                 + " is not positive definite");
        const auto m = points.rows();
        Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(m, m);
        llt_.matrixL().solveInPlace(linv);
        diag_ = linv.colwise().squaredNorm().transpose();
    }

    void remove(std::size_t s)
    {
        const auto m = static_cast<Eigen::Index>(active_.size());
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e[static_cast<Eigen::Index>(s)] = 1.0;
        Eigen::VectorXd col = llt_.solve(e);
        for (const auto& v : downdates_)
            col -= v * v[static_cast<Eigen::Index>(s)];
        double pivot = col[static_cast<Eigen::Index>(s)];
        if (!(pivot > 0.0))
            throw NumericalError("MICE: lost positive definiteness while removing a candidate");
        Eigen::VectorXd v = col / std::sqrt(pivot);
        diag_ -= v.cwiseAbs2();
        downdates_.push_back(std::move(v));
        active_[s] = false;
    }

    /// Correlation-scale conditional variance of candidate i given the rest.
    double conditional_variance(std::size_t i) const
    {
        return 1.0 / diag_[static_cast<Eigen::Index>(i)] - nugget_;
    }

private:
    double nugget_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    std::vector<bool> active_;
    Eigen::VectorXd diag_;
    std::vector<Eigen::VectorXd> downdates_;
};

template <typename Score>
std::size_t argmax_over(std::span<const std::size_t> idx, Score&& score)
{
    std::size_t best = idx.front();
    double best_v = score(0);
    for (std::size_t i = 1; i < idx.size(); ++i) {
        double v = score(i);
        if (v > best_v) {
            best_v = v;
            best = idx[i];
        }
    }
    return best;
}

}  // namespace

double beta_schedule(std::size_t t, std::size_t candidate_count, double delta)
{
    if (t < 1 || candidate_count < 1)
        throw ConfigError("beta_schedule: t and candidate count must be at least 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("beta_schedule: delta must lie in (0, 1)");
    const double tt = static_cast<double>(t);
    return 2.0 * std::log(static_cast<double>(candidate_count) * tt * tt * std::numbers::pi * std::numbers::pi
                          / (6.0 * delta));
}

ConfidenceBounds make_bounds(Eigen::VectorXd mean, Eigen::VectorXd sd, double beta)
{
    if (!(beta >= 0.0))
        throw ConfigError("confidence bounds: beta must be non-negative");
    ConfidenceBounds b;
    const double w = std::sqrt(beta);
    b.upper = mean + w * sd;
    b.lower = mean - w * sd;
    b.mean = std::move(mean);
    b.sd = std::move(sd);
    b.beta = beta;
    return b;
}

ConfidenceBounds confidence_bounds(const GpModel& model, double beta, const CandidateSet& candidates)
{
    Eigen::VectorXd mean, var;
    model.predict_many(candidates.points, mean, var);
    return make_bounds(std::move(mean), var.cwiseSqrt(), beta);
}

std::size_t ucb_select(const ConfidenceBounds& bounds)
{
    if (bounds.upper.size() == 0)
        throw ConfigError("ucb_select: no candidates");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < bounds.upper.size(); ++i)
        if (bounds.upper[i] > bounds.upper[best])
            best = i;
    return static_cast<std::size_t>(best);
}

bool RelevantRegion::contains(std::size_t i) const { return std::binary_search(members.begin(), members.end(), i); }

RelevantRegion relevant_region(const ConfidenceBounds& bounds)
{
    if (bounds.lower.size() == 0)
        throw ConfigError("relevant_region: no candidates");
    RelevantRegion r;
    Eigen::Index xb = 0;
    for (Eigen::Index i = 1; i < bounds.lower.size(); ++i)
        if (bounds.lower[i] > bounds.lower[xb])
            xb = i;
    r.x_bullet = static_cast<std::size_t>(xb);
    r.y_bullet = bounds.lower[xb];
    for (Eigen::Index i = 0; i < bounds.upper.size(); ++i)
        if (bounds.upper[i] >= r.y_bullet)
            r.members.push_back(static_cast<std::size_t>(i));
    return r;
}

double mice_score(const GpModel& model_t, const CandidateSet& candidates, std::size_t x,
                  std::span<const std::size_t> rest, double nugget)
{
    if (!(nugget > 0.0))
        throw ConfigError("mice_score: nugget must be positive");
    if (x >= candidates.size())
        throw ConfigError("mice_score: candidate index out of range");
    if (std::find(rest.begin(), rest.end(), x) != rest.end())
        throw ConfigError("mice_score: the scored candidate must not be part of the conditioning set");

    const Eigen::MatrixXd xr = candidates.points.row(static_cast<Eigen::Index>(x));
    double numerator = model_t.variance_many(xr)[0];
    double conditional = 1.0;
    if (!rest.empty()) {
        Eigen::MatrixXd rows = gather_rows(candidates.points, rest);
        Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(model_t.kernel(), rows, nugget));
        if (llt.info() != Eigen::Success)
            throw NumericalError("mice_score: conditioning matrix not positive definite");
        Eigen::VectorXd k = kernel_cross(model_t.kernel(), rows, xr).col(0);
        conditional = 1.0 - k.dot(llt.solve(k));
    }
    if (conditional < kMinDenominator)
        throw NumericalError("mice_score: denominator variance below 1e-12 (candidates too close)");
    return numerator / (model_t.output_variance() * conditional);
}

std::string to_string(Provenance p)
{
    switch (p) {
    case Provenance::Design:
        return "design";
    case Provenance::UCB:
        return "UCB";
    case Provenance::MICE:
        return "MICE";
    case Provenance::ALM:
        return "ALM";
    }
    return "unknown";
}

Batch select_batch(const GpModel& model, const ConfidenceBounds& bounds, const RelevantRegion& region,
                   CandidateSet& candidates, const BatchOptions& options)
{
    const std::size_t m = candidates.size();
    if (static_cast<std::size_t>(bounds.upper.size()) != m)
        throw ConfigError("select_batch: bounds do not match candidate set");
    if (options.batch_size < 1)
        throw ConfigError("select_batch: batch size must be at least 1");
    std::size_t free_count = static_cast<std::size_t>(std::count(candidates.selected.begin(), candidates.selected.end(), false));
    if (options.batch_size > free_count)
        throw ConfigError("select_batch: batch size " + std::to_string(options.batch_size)
                          + " exceeds available candidates " + std::to_string(free_count));
    if (region.members.empty())
        throw ConfigError("select_batch: empty relevant region");
    if (options.rule == FillRule::Mice && !(options.nugget > 0.0))
        throw ConfigError("select_batch: nugget must be positive");

    Batch batch;
    auto take = [&](std::size_t idx, Provenance tag) {
        candidates.selected[idx] = true;
        batch.indices.push_back(idx);
        batch.points.push_back(candidates.point(idx));
        batch.provenance.push_back(tag);
    };

    std::size_t first = 0;
    {
        bool found = false;
        for (std::size_t i = 0; i < m; ++i)
            if (!candidates.selected[i] && (!found || bounds.upper[static_cast<Eigen::Index>(i)] > bounds.upper[static_cast<Eigen::Index>(first)])) {
                first = i;
                found = true;
            }
    }
    take(first, Provenance::UCB);
    if (options.batch_size == 1)
        return batch;

    GpModel current = model.with_fantasy(batch.points.back());
    std::optional<RestConditioning> rest;
    if (options.rule == FillRule::Mice) {
        rest.emplace(model.kernel(), candidates.points, options.nugget);
        for (std::size_t i = 0; i < m; ++i)
            if (candidates.selected[i])
                rest->remove(i);
    }
    std::vector<std::size_t> members = region.members;
    const Provenance tag = options.rule == FillRule::Mice ? Provenance::MICE : Provenance::ALM;

    for (std::size_t k = 1; k < options.batch_size; ++k) {
        std::vector<std::size_t> eligible;
        for (std::size_t i : members)
            if (!candidates.selected[i])
                eligible.push_back(i);
        if (eligible.empty())
            for (std::size_t i = 0; i < m; ++i)
                if (!candidates.selected[i])
                    eligible.push_back(i);

        Eigen::VectorXd var = current.variance_many(gather_rows(candidates.points, eligible));
        std::size_t pick;
        if (options.rule == FillRule::Mice) {
            Eigen::VectorXd den(var.size());
            for (std::size_t i = 0; i < eligible.size(); ++i) {
                double c = rest->conditional_variance(eligible[i]);
                if (c < kMinDenominator)
                    throw NumericalError("MICE: denominator variance below 1e-12 (candidates too close)");
                den[static_cast<Eigen::Index>(i)] = c * current.output_variance();
            }
            pick = argmax_over(eligible, [&](std::size_t i) {
                return var[static_cast<Eigen::Index>(i)] / den[static_cast<Eigen::Index>(i)];
            });
        } else {
            pick = argmax_over(eligible, [&](std::size_t i) { return var[static_cast<Eigen::Index>(i)]; });
        }

        take(pick, tag);
        if (rest)
            rest->remove(pick);
        if (k + 1 < options.batch_size) {
            current = current.with_fantasy(batch.points.back());
            if (options.region_update) {
                Eigen::VectorXd sd = current.variance_many(candidates.points).cwiseSqrt();
                members = relevant_region(make_bounds(bounds.mean, sd, bounds.beta)).members;
            }
        }
    }
    return batch;
}

Batch mice_select_batch(const GpModel& model, const ConfidenceBounds& bounds, const RelevantRegion& region,
                        CandidateSet& candidates, std::size_t batch_size, double nugget)
{
    BatchOptions opts;
    opts.batch_size = batch_size;
    opts.nugget = nugget;
    opts.rule = FillRule::Mice;
    return select_batch(model, bounds, region, candidates, opts);
}

std::size_t alm_select(const GpModel& model, const RelevantRegion& region, const CandidateSet& candidates)
{
    std::vector<std::size_t> eligible;
    for (std::size_t i : region.members)
        if (i < candidates.size() && !candidates.selected[i])
            eligible.push_back(i);
    if (eligible.empty())
        throw ConfigError("alm_select: no unselected region members");
    Eigen::VectorXd var = model.variance_many(gather_rows(candidates.points, eligible));
    return argmax_over(eligible, [&](std::size_t i) { return var[static_cast<Eigen::Index>(i)]; });
}

}  // namespace optimice
