#include "optimice/morris.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace optimice {

double morris_delta(std::size_t levels)
{
    if (levels < 2 || levels % 2 != 0)
        throw ConfigError("morris: grid levels must be even and at least 2");
    const auto p = static_cast<double>(levels);
    return p / (2.0 * (p - 1.0));
}

std::vector<Trajectory> build_trajectories(std::size_t d, std::size_t levels, std::size_t count, RngStream& rng)
{
    const double delta = morris_delta(levels);
    if (d < 1 || count < 1)
        throw ConfigError("morris: need d >= 1 and at least one trajectory");
    const std::size_t jump = levels / 2;
    const double top = static_cast<double>(levels - 1);

    std::vector<Trajectory> out;
    out.reserve(count);
    for (std::size_t m = 0; m < count; ++m) {
        std::vector<std::size_t> level(d);
        for (auto& l : level)
            l = static_cast<std::size_t>(rng.below(levels));
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));

        Trajectory t;
        t.delta = delta;
        t.perturbed = order;
        t.points.resize(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(d));
        auto store = [&](std::size_t row) {
            for (std::size_t j = 0; j < d; ++j)
                t.points(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = static_cast<double>(level[j]) / top;
        };
        store(0);
        for (std::size_t s = 0; s < d; ++s) {
            std::size_t j = order[s];
            bool up = level[j] + jump <= levels - 1;
            bool down = level[j] >= jump;
            if (up && down)
                up = rng.below(2) == 0;
            if (!up && !down)
                throw ConfigError("morris: infeasible grid step");
            level[j] = up ? level[j] + jump : level[j] - jump;
            store(s + 1);
        }
        out.push_back(std::move(t));
    }
    return out;
}

double trajectory_distance(const Trajectory& a, const Trajectory& b)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.points.rows(); ++i)
        for (Eigen::Index j = 0; j < b.points.rows(); ++j)
            s += (a.points.row(i) - b.points.row(j)).norm();
    return s;
}

std::vector<std::size_t> ot_select_indices(const std::vector<Trajectory>& trajectories, std::size_t r)
{
    const std::size_t m = trajectories.size();
    if (r > m)
        throw ConfigError("ot_select: r = " + std::to_string(r) + " exceeds pool size " + std::to_string(m));
    if (r == 0)
        throw ConfigError("ot_select: r must be positive");
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (r == m)
        return all;

    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            double dist = trajectory_distance(trajectories[i], trajectories[j]);
            d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dist * dist;
            d2(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dist * dist;
        }

    double combos = 1.0;
    for (std::size_t i = 0; i < r; ++i)
        combos = combos * static_cast<double>(m - i) / static_cast<double>(i + 1);

    if (combos <= 1e5) {
        std::vector<std::size_t> cur(r), best;
        std::iota(cur.begin(), cur.end(), std::size_t{0});
        double best_v = -1.0;
        while (true) {
            double v = 0.0;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = i + 1; j < r; ++j)
                    v += d2(static_cast<Eigen::Index>(cur[i]), static_cast<Eigen::Index>(cur[j]));
            if (v > best_v) {
                best_v = v;
                best = cur;
            }
            // next combination in lexicographic order
            std::size_t i = r;
            while (i > 0 && cur[i - 1] == m - r + (i - 1))
                --i;
            if (i == 0)
                break;
            ++cur[i - 1];
            for (std::size_t j = i; j < r; ++j)
                cur[j] = cur[j - 1] + 1;
        }
        return best;
    }

    std::vector<bool> alive(m, true);
    Eigen::VectorXd contribution = d2.rowwise().sum();
    for (std::size_t left = m; left > r; --left) {
        std::size_t drop = m;
        for (std::size_t i = 0; i < m; ++i)
            if (alive[i] && (drop == m || contribution[static_cast<Eigen::Index>(i)] < contribution[static_cast<Eigen::Index>(drop)]))
                drop = i;
        alive[drop] = false;
        contribution -= d2.col(static_cast<Eigen::Index>(drop));
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < m; ++i)
        if (alive[i])
            kept.push_back(i);
    return kept;
}

std::vector<Trajectory> ot_select(const std::vector<Trajectory>& trajectories, std::size_t r)
{
    std::vector<Trajectory> out;
    for (std::size_t i : ot_select_indices(trajectories, r))
        out.push_back(trajectories[i]);
    return out;
}

Eigen::VectorXd elementary_effects(const Trajectory& traj, const Eigen::VectorXd& values)
{
    const std::size_t d = traj.dim();
    if (static_cast<std::size_t>(values.size()) != d + 1)
        throw ConfigError("elementary_effects: expected " + std::to_string(d + 1) + " values, got "
                          + std::to_string(values.size()));
    Eigen::VectorXd ee(static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < d; ++s) {
        const auto j = static_cast<Eigen::Index>(traj.perturbed[s]);
        const auto i = static_cast<Eigen::Index>(s);
        double step = traj.points(i + 1, j) - traj.points(i, j);
        ee[j] = (values[i + 1] - values[i]) / step;
    }
    return ee;
}

std::string to_string(InfluenceClass c)
{
    switch (c) {
    case InfluenceClass::Negligible:
        return "negligible";
    case InfluenceClass::Linear:
        return "linear";
    case InfluenceClass::Monotonic:
        return "monotonic";
    case InfluenceClass::Nonlinear:
        return "nonlinear";
    case InfluenceClass::Interaction:
        return "interaction";
    }
    return "unknown";
}

InfluenceClass classify(double mu_star, double sigma, double mu_star_max)
{
    if (!(mu_star >= 0.0))
        throw ConfigError("classify: mu* must be non-negative");
    if (mu_star_max <= 0.0 || mu_star < 0.05 * mu_star_max)
        return InfluenceClass::Negligible;
    double ratio = sigma / mu_star;
    if (ratio < 0.1)
        return InfluenceClass::Linear;
    if (ratio < 0.5)
        return InfluenceClass::Monotonic;
    if (ratio <= 1.0)
        return InfluenceClass::Nonlinear;
    return InfluenceClass::Interaction;
}

MorrisResult summarize_effects(const Eigen::MatrixXd& effects, std::vector<std::string> names)
{
    const auto r = effects.rows();
    const auto d = effects.cols();
    if (r < 2)
        throw ConfigError("morris: at least two trajectories are needed for sigma");
    MorrisResult res;
    res.names = std::move(names);
    res.r = static_cast<std::size_t>(r);
    res.effects = effects;
    res.mu = effects.colwise().mean().transpose();
    res.mu_star = effects.cwiseAbs().colwise().mean().transpose();
    res.sigma.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
        res.sigma[j] = std::sqrt((effects.col(j).array() - res.mu[j]).square().sum() / static_cast<double>(r - 1));
    double max_star = res.mu_star.maxCoeff();
    for (Eigen::Index j = 0; j < d; ++j)
        res.classes.push_back(classify(res.mu_star[j], res.sigma[j], max_star));
    return res;
}

MorrisResult screen(const Objective& objective, const ParameterSpace& space, const MorrisOptions& options,
                    RngStream& rng)
{
    const std::size_t d = space.dim();
    if (options.r < 2)
        throw ConfigError("screen: r must be at least 2");
    if (options.pool < options.r)
        throw ConfigError("screen: trajectory pool smaller than r");
    const Objective target = objective.with_space(space);

    RngStream pool_rng = rng.derive("trajectories");
    auto pool = build_trajectories(d, options.levels, options.pool, pool_rng);
    auto chosen = ot_select(pool, options.r);

    std::vector<Point> points;
    for (const auto& t : chosen)
        for (Eigen::Index i = 0; i < t.points.rows(); ++i)
            points.push_back(space.from_unit(t.points.row(i).transpose()));
    std::vector<double> values = batch_evaluate(target, points, std::max<std::size_t>(options.parallelism, 1));

    Eigen::MatrixXd effects(static_cast<Eigen::Index>(options.r), static_cast<Eigen::Index>(d));
    for (std::size_t m = 0; m < chosen.size(); ++m) {
        Eigen::Map<const Eigen::VectorXd> v(values.data() + m * (d + 1), static_cast<Eigen::Index>(d + 1));
        effects.row(static_cast<Eigen::Index>(m)) = elementary_effects(chosen[m], v).transpose();
    }
    MorrisResult res = summarize_effects(effects, space.names());
    res.trajectories = std::move(chosen);
    res.evaluations = points.size();
    return res;
}

std::vector<RobustnessRow> robustness_study(const Objective& objective, const ParameterSpace& space,
                                            const std::vector<std::size_t>& r_values, const MorrisOptions& options,
                                            RngStream& rng)
{
    if (r_values.empty())
        throw ConfigError("robustness_study: no r values");
    if (!std::is_sorted(r_values.begin(), r_values.end()))
        throw ConfigError("robustness_study: r values must be ascending");
    std::vector<RobustnessRow> rows;
    for (std::size_t r : r_values) {
        MorrisOptions o = options;
        o.r = r;
        RngStream sub = rng.derive("r=" + std::to_string(r));
        MorrisResult res = screen(objective, space, o, sub);
        for (std::size_t j = 0; j < space.dim(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            Eigen::ArrayXd abs_ee = res.effects.col(jj).cwiseAbs().array();
            double sd = std::sqrt((abs_ee - res.mu_star[jj]).square().sum() / static_cast<double>(r - 1));
            rows.push_back({r, res.names[j], res.mu_star[jj], sd / std::sqrt(static_cast<double>(r))});
        }
    }
    return rows;
}

void write_screening_csv(std::ostream& out, const MorrisResult& result)
{
    out << "input,mu,mu_star,sigma,ratio,class,r\n";
    for (std::size_t j = 0; j < result.names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        double ratio = result.mu_star[jj] > 0.0 ? result.sigma[jj] / result.mu_star[jj]
                                                : std::numeric_limits<double>::quiet_NaN();
        out << result.names[j] << "," << format_double(result.mu[jj]) << "," << format_double(result.mu_star[jj])
            << "," << format_double(result.sigma[jj]) << "," << format_double(ratio) << ","
            << to_string(result.classes[j]) << "," << result.r << "\n";
    }
}

void write_robustness_csv(std::ostream& out, const std::vector<RobustnessRow>& rows)
{
    out << "r,input,mu_star,stderr\n";
    for (const auto& row : rows)
        out << row.r << "," << row.input << "," << format_double(row.mu_star) << "," << format_double(row.stderr_)
            << "\n";
}

}  // namespace optimice
