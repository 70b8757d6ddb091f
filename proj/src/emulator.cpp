#include "optimice/emulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>

#include "optimice/design.hpp"

namespace optimice {

namespace {

// Smallest admissible Cholesky pivot on the unit-diagonal correlation scale.
constexpr double kMinPivot = 1e-13;

std::atomic<std::uint64_t> g_predictions{0};

std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& k)
{
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
        return std::nullopt;
    Eigen::MatrixXd l = llt.matrixL();
    if (l.diagonal().array().square().minCoeff() < kMinPivot)
        return std::nullopt;
    return l;
}

Standardization standardize_stats(const Eigen::VectorXd& y)
{
    Standardization s;
    s.mean = y.mean();
    if (y.size() >= 2) {
        double ss = (y.array() - s.mean).square().sum() / static_cast<double>(y.size() - 1);
        s.sd = std::sqrt(ss);
    }
    if (!(s.sd > 0.0) || !std::isfinite(s.sd))
        s.sd = 1.0;
    return s;
}

// GLS constant mean and profile variance given a Cholesky factor.
struct Profile {
    double beta;
    double sigma2;
    Eigen::VectorXd alpha;
};

Profile profile(const Eigen::MatrixXd& l, const Eigen::VectorXd& y)
{
    const auto n = y.size();
    auto tri = l.triangularView<Eigen::Lower>();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd l_ones = tri.solve(ones);
    Eigen::VectorXd l_y = tri.solve(y);
    double beta = l_ones.dot(l_y) / l_ones.squaredNorm();
    Eigen::VectorXd l_r = l_y - beta * l_ones;
    double sigma2 = std::max(l_r.squaredNorm() / static_cast<double>(n), GpModel::kVarianceFloor);
    Eigen::VectorXd alpha = l.transpose().triangularView<Eigen::Upper>().solve(l_r);
    return {beta, sigma2, std::move(alpha)};
}

// The jitter only conditions the factorization. Mean weights are refined
// toward K alpha = r with the jittered factor as preconditioner so that
// training outputs are reproduced; each mode contracts by jitter / (lambda + jitter).
Eigen::VectorXd refine_weights(const Eigen::MatrixXd& k, const Eigen::MatrixXd& l, const Eigen::VectorXd& r,
                               Eigen::VectorXd alpha)
{
    constexpr int kMaxSweeps = 30;
    const double target = 1e-15 * std::max(1.0, r.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd best = alpha;
    double best_res = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
        Eigen::VectorXd res = r - k * alpha;
        const double norm = res.lpNorm<Eigen::Infinity>();
        if (!(norm < best_res))
            break;
        best = alpha;
        best_res = norm;
        if (norm <= target)
            break;
        l.triangularView<Eigen::Lower>().solveInPlace(res);
        l.transpose().triangularView<Eigen::Upper>().solveInPlace(res);
        alpha += res;
    }
    return best;
}

double profiled_log_likelihood(const Eigen::MatrixXd& l, const Eigen::VectorXd& y)
{
    const auto n = static_cast<double>(y.size());
    Profile p = profile(l, y);
    double log_det_half = l.diagonal().array().log().sum();
    return -0.5 * n * std::log(2.0 * std::numbers::pi * p.sigma2) - 0.5 * n - log_det_half;
}

// Bounded Nelder-Mead minimizer. Points outside the box are projected back.
class NelderMead {
public:
    NelderMead(Eigen::VectorXd lower, Eigen::VectorXd upper, std::size_t max_iterations)
        : lower_(std::move(lower)), upper_(std::move(upper)), max_iterations_(max_iterations)
    {
    }

    template <typename F>
    std::pair<Eigen::VectorXd, double> minimize(F&& f, const Eigen::VectorXd& start, double step) const
    {
        const auto d = start.size();
        std::vector<Eigen::VectorXd> simplex;
        std::vector<double> values;
        simplex.push_back(clamp(start));
        for (Eigen::Index i = 0; i < d; ++i) {
            Eigen::VectorXd v = simplex[0];
            v[i] += (v[i] + step <= upper_[i]) ? step : -step;
            simplex.push_back(clamp(v));
        }
        for (const auto& v : simplex)
            values.push_back(f(v));

        std::vector<std::size_t> order(simplex.size());
        for (std::size_t it = 0; it < max_iterations_; ++it) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

            double spread = values[worst] - values[best];
            double size = 0.0;
            for (const auto& v : simplex)
                size = std::max(size, (v - simplex[best]).cwiseAbs().maxCoeff());
            if ((std::isfinite(spread) && spread < 1e-10) || size < 1e-8)
                break;

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
            for (std::size_t i = 0; i < simplex.size(); ++i)
                if (i != worst)
                    centroid += simplex[i];
            centroid /= static_cast<double>(d);

            Eigen::VectorXd reflected = clamp(centroid + (centroid - simplex[worst]));
            double f_reflected = f(reflected);
            if (f_reflected < values[best]) {
                Eigen::VectorXd expanded = clamp(centroid + 2.0 * (centroid - simplex[worst]));
                double f_expanded = f(expanded);
                if (f_expanded < f_reflected) {
                    simplex[worst] = expanded;
                    values[worst] = f_expanded;
                } else {
                    simplex[worst] = reflected;
                    values[worst] = f_reflected;
                }
                continue;
            }
            if (f_reflected < values[second]) {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
                continue;
            }
            bool outside = f_reflected < values[worst];
            Eigen::VectorXd contracted = outside ? clamp(centroid + 0.5 * (reflected - centroid))
                                                 : clamp(centroid + 0.5 * (simplex[worst] - centroid));
            double f_contracted = f(contracted);
            if (f_contracted < std::min(f_reflected, values[worst])) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
                continue;
            }
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == best)
                    continue;
                simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
                values[i] = f(simplex[i]);
            }
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] < values[best])
                best = i;
        return {simplex[best], values[best]};
    }

private:
    Eigen::VectorXd clamp(const Eigen::VectorXd& v) const { return v.cwiseMax(lower_).cwiseMin(upper_); }

    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    std::size_t max_iterations_;
};

}  // namespace

GpModel GpModel::condition(const Dataset& data, const KernelConfig& kernel, double jitter, double max_jitter,
                           std::optional<double> process_variance, std::optional<Standardization> standardization)
{
    if (data.empty())
        throw ConfigError("GP: cannot condition on an empty dataset");
    if (data.dim() != kernel.dim())
        throw ConfigError("GP: dataset dimension does not match kernel");
    if (!(jitter >= 0.0))
        throw ConfigError("GP: jitter must be non-negative");
    kernel.validate();

    GpModel m;
    m.kernel_ = kernel;
    m.standardization_ = standardization ? *standardization : standardize_stats(data.output_vector());
    m.train_ = Dataset(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i)
        m.train_.append(data.inputs()[i], (data.outputs()[i] - m.standardization_.mean) / m.standardization_.sd);
    m.inputs_ = m.train_.input_matrix();

    Eigen::MatrixXd k = kernel_matrix(kernel, m.inputs_, 0.0);
    double level = jitter;
    std::optional<Eigen::MatrixXd> l;
    while (true) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += level;
        l = try_cholesky(kj);
        if (l)
            break;
        double next = level > 0.0 ? level * 10.0 : 1e-8;
        if (next > max_jitter * (1.0 + 1e-9))
            throw NumericalError("GP: correlation matrix not positive definite at jitter " + format_double(level));
        level = next;
    }
    m.jitter_ = level;
    m.chol_ = std::move(*l);

    Eigen::VectorXd y = m.train_.output_vector();
    Profile p = profile(m.chol_, y);
    m.beta_ = p.beta;
    m.sigma2_ = process_variance ? std::max(*process_variance, kVarianceFloor) : p.sigma2;
    Eigen::VectorXd resid = (y.array() - m.beta_).matrix();
    m.alpha_ = level > 0.0 ? refine_weights(k, m.chol_, resid, std::move(p.alpha)) : std::move(p.alpha);
    return m;
}

Eigen::VectorXd GpModel::raw_correlation_variance(const Eigen::MatrixXd& x) const
{
    Eigen::MatrixXd k = kernel_cross(kernel_, inputs_, x);
    chol_.triangularView<Eigen::Lower>().solveInPlace(k);
    return (1.0 - k.colwise().squaredNorm().array()).matrix().transpose();
}

void GpModel::predict_many(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const
{
    if (static_cast<std::size_t>(x.cols()) != dim())
        throw ConfigError("predict: point dimension does not match model");
    g_predictions.fetch_add(static_cast<std::uint64_t>(x.rows()), std::memory_order_relaxed);
    Eigen::MatrixXd k = kernel_cross(kernel_, inputs_, x);
    Eigen::VectorXd m_std = (k.transpose() * alpha_).array() + beta_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(k);
    Eigen::ArrayXd corr_var = 1.0 - k.colwise().squaredNorm().transpose().array();
    mean = (m_std.array() * standardization_.sd + standardization_.mean).matrix();
    variance = (corr_var.max(0.0) * output_variance()).matrix();
}

Prediction GpModel::predict(const Point& x) const
{
    Eigen::VectorXd mean, variance;
    predict_many(x.transpose(), mean, variance);
    return {mean[0], variance[0]};
}

Eigen::VectorXd GpModel::variance_many(const Eigen::MatrixXd& x) const
{
    if (static_cast<std::size_t>(x.cols()) != dim())
        throw ConfigError("predict: point dimension does not match model");
    g_predictions.fetch_add(static_cast<std::uint64_t>(x.rows()), std::memory_order_relaxed);
    return (raw_correlation_variance(x).array().max(0.0) * output_variance()).matrix();
}

GpModel GpModel::with_fantasy(const Point& x_new) const
{
    if (static_cast<std::size_t>(x_new.size()) != dim())
        throw ConfigError("fantasy update: point dimension does not match model");
    if (train_.find_near(x_new) >= 0)
        throw ConfigError("fantasy update: point duplicates a training input");

    GpModel m = *this;
    const auto n = inputs_.rows();
    Eigen::VectorXd k = kernel_cross(kernel_, inputs_, x_new.transpose()).col(0);
    Eigen::VectorXd l = chol_.triangularView<Eigen::Lower>().solve(k);
    double pivot = 1.0 + jitter_ - l.squaredNorm();
    if (pivot < kMinPivot)
        throw NumericalError("fantasy update: correlation matrix lost positive definiteness at jitter "
                             + format_double(jitter_));

    // An output equal to the current posterior mean leaves alpha = [alpha; 0].
    double placeholder = beta_ + k.dot(alpha_);
    m.train_.append(x_new, placeholder);
    m.inputs_.conservativeResize(n + 1, Eigen::NoChange);
    m.inputs_.row(n) = x_new.transpose();
    m.chol_.conservativeResize(n + 1, n + 1);
    m.chol_.col(n).setZero();
    m.chol_.row(n).head(n) = l.transpose();
    m.chol_(n, n) = std::sqrt(pivot);
    m.alpha_.conservativeResize(n + 1);
    m.alpha_[n] = 0.0;
    m.fantasy_ = true;
    return m;
}

double log_likelihood(const Dataset& data, const KernelConfig& kernel, double jitter)
{
    if (data.empty())
        throw ConfigError("log_likelihood: empty dataset");
    Eigen::MatrixXd k = kernel_matrix(kernel, data.input_matrix(), jitter);
    auto l = try_cholesky(k);
    if (!l)
        throw NumericalError("log_likelihood: factorization failed at jitter " + format_double(jitter));
    return profiled_log_likelihood(*l, data.output_vector());
}

GpModel fit(const Dataset& data, const FitOptions& options, RngStream& rng)
{
    const std::size_t d = data.dim();
    if (data.size() < d + 2)
        throw ConfigError("fit: need at least d + 2 = " + std::to_string(d + 2) + " points, got "
                          + std::to_string(data.size()));
    if (!(options.min_length_scale > 0.0 && options.min_length_scale < options.max_length_scale))
        throw ConfigError("fit: invalid length-scale box");

    auto make_kernel = [&](const Eigen::VectorXd& scales) {
        KernelConfig k{options.family, scales, options.smoothness};
        k.validate();
        return k;
    };

    Standardization stats = standardize_stats(data.output_vector());
    const Eigen::VectorXd y = data.output_vector();
    const bool degenerate = (y.array() == y[0]).all();

    if (options.fixed_length_scales || degenerate) {
        Eigen::VectorXd scales = options.fixed_length_scales
                                     ? *options.fixed_length_scales
                                     : Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), 1.0);
        return GpModel::condition(data, make_kernel(scales), options.jitter, options.max_jitter,
                                  options.fixed_process_variance, stats);
    }

    Dataset standardized(d);
    for (std::size_t i = 0; i < data.size(); ++i)
        standardized.append(data.inputs()[i], (y[static_cast<Eigen::Index>(i)] - stats.mean) / stats.sd);
    const Eigen::MatrixXd inputs = standardized.input_matrix();
    const Eigen::VectorXd ys = standardized.output_vector();

    auto neg_ll = [&](const Eigen::VectorXd& log_scales) {
        KernelConfig k{options.family, log_scales.array().exp().matrix(), options.smoothness};
        Eigen::MatrixXd km = kernel_matrix(k, inputs, 0.0);
        for (double level = options.jitter; level <= options.max_jitter * (1.0 + 1e-9); level *= 10.0) {
            Eigen::MatrixXd kj = km;
            kj.diagonal().array() += level;
            if (auto l = try_cholesky(kj))
                return -profiled_log_likelihood(*l, ys);
            if (level == 0.0)
                level = 1e-9;
        }
        return std::numeric_limits<double>::infinity();
    };

    const auto dd = static_cast<Eigen::Index>(d);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(dd, std::log(options.min_length_scale));
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(dd, std::log(options.max_length_scale));
    NelderMead nm(lo, hi, options.max_iterations);

    RngStream start_rng = rng.derive("fit-starts");
    Eigen::MatrixXd starts = lhd_sample(std::max<std::size_t>(options.starts, 1), d, start_rng);

    Eigen::VectorXd best_x;
    double best_f = std::numeric_limits<double>::infinity();
    const double step = 0.1 * (hi[0] - lo[0]);
    for (Eigen::Index s = 0; s < starts.rows(); ++s) {
        Eigen::VectorXd x0 = lo.array() + starts.row(s).transpose().array() * (hi - lo).array();
        auto [x, f] = nm.minimize(neg_ll, x0, step);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    if (!std::isfinite(best_f))
        throw NumericalError("fit: no length scales gave a factorizable correlation matrix up to jitter "
                             + format_double(options.max_jitter));

    return GpModel::condition(data, make_kernel(best_x.array().exp().matrix()), options.jitter, options.max_jitter,
                              options.fixed_process_variance, stats);
}

std::uint64_t prediction_count() { return g_predictions.load(std::memory_order_relaxed); }

void save_emulator(std::ostream& out, const SavedEmulator& saved)
{
    const GpModel& m = saved.model;
    const std::size_t d = saved.space.dim();
    if (d != m.dim())
        throw ConfigError("save_emulator: space and model dimensions differ");
    out << "optimice-gp 1\n";
    out << "space " << d << "\n";
    for (const auto& dim : saved.space.dims())
        out << "dim " << dim.name << " " << format_double(dim.lower) << " " << format_double(dim.upper) << "\n";
    out << "kernel " << to_string(m.kernel().family) << " " << format_double(m.kernel().smoothness) << "\n";
    out << "length_scales";
    for (Eigen::Index i = 0; i < m.kernel().length_scales.size(); ++i)
        out << " " << format_double(m.kernel().length_scales[i]);
    out << "\n";
    out << "process_variance " << format_double(m.process_variance()) << "\n";
    out << "jitter " << format_double(m.jitter()) << "\n";
    out << "standardization " << format_double(m.standardization().mean) << " "
        << format_double(m.standardization().sd) << "\n";
    out << "incumbent";
    if (saved.incumbent)
        for (Eigen::Index i = 0; i < saved.incumbent->size(); ++i)
            out << " " << format_double((*saved.incumbent)[i]);
    else
        out << " none";
    out << "\n";
    const Dataset& t = m.train();
    out << "train " << t.size() << "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j)
            out << format_double(t.inputs()[i][static_cast<Eigen::Index>(j)]) << " ";
        // natural units so conditioning reproduces the standardized values
        out << format_double(t.outputs()[i] * m.standardization().sd + m.standardization().mean) << "\n";
    }
}

SavedEmulator load_emulator(std::istream& in)
{
    std::string line;
    auto next_line = [&](const std::string& expect) {
        if (!std::getline(in, line))
            throw ConfigError("model file: unexpected end of file, expected '" + expect + "'");
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key != expect)
            throw ConfigError("model file: expected '" + expect + "', found '" + key + "'");
        std::vector<std::string> fields;
        for (std::string f; ss >> f;)
            fields.push_back(f);
        return fields;
    };
    auto header = next_line("optimice-gp");
    if (header.size() != 1 || header[0] != "1")
        throw ConfigError("model file: unsupported version");

    auto sp = next_line("space");
    if (sp.size() != 1)
        throw ConfigError("model file: malformed space line");
    const auto d = static_cast<std::size_t>(parse_double(sp[0]));
    std::vector<Dimension> dims;
    for (std::size_t i = 0; i < d; ++i) {
        auto f = next_line("dim");
        if (f.size() != 3)
            throw ConfigError("model file: malformed dim line");
        dims.push_back({f[0], parse_double(f[1]), parse_double(f[2])});
    }
    ParameterSpace space(std::move(dims));

    auto kf = next_line("kernel");
    if (kf.size() != 2)
        throw ConfigError("model file: malformed kernel line");
    auto ls = next_line("length_scales");
    if (ls.size() != d)
        throw ConfigError("model file: length scale count differs from space dimension");
    Eigen::VectorXd scales(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        scales[static_cast<Eigen::Index>(i)] = parse_double(ls[i]);
    KernelConfig kernel{kernel_family_from_string(kf[0]), scales, parse_double(kf[1])};
    kernel.validate();

    auto pv = next_line("process_variance");
    auto jt = next_line("jitter");
    auto st = next_line("standardization");
    auto inc = next_line("incumbent");
    if (pv.size() != 1 || jt.size() != 1 || st.size() != 2)
        throw ConfigError("model file: malformed hyperparameter line");
    std::optional<Point> incumbent;
    if (!(inc.size() == 1 && inc[0] == "none")) {
        if (inc.size() != d)
            throw ConfigError("model file: incumbent dimension mismatch");
        Point p(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            p[static_cast<Eigen::Index>(i)] = parse_double(inc[i]);
        incumbent = p;
    }

    auto tr = next_line("train");
    if (tr.size() != 1)
        throw ConfigError("model file: malformed train line");
    const auto n = static_cast<std::size_t>(parse_double(tr[0]));
    Dataset data(d);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw ConfigError("model file: truncated training data");
        std::istringstream ss(line);
        std::vector<std::string> f;
        for (std::string s; ss >> s;)
            f.push_back(s);
        if (f.size() != d + 1)
            throw ConfigError("model file: malformed training row " + std::to_string(i));
        Point x(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < d; ++j)
            x[static_cast<Eigen::Index>(j)] = parse_double(f[j]);
        data.append(x, parse_double(f[d]));
    }

    Standardization stats{parse_double(st[0]), parse_double(st[1])};
    double jitter = parse_double(jt[0]);
    GpModel model = GpModel::condition(data, kernel, jitter, jitter, parse_double(pv[0]), stats);
    return {std::move(space), std::move(model), std::move(incumbent)};
}

}  // namespace optimice
