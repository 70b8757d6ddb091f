#include "optimice/design.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace optimice {

CandidateSet::CandidateSet(Eigen::MatrixXd rows) : points(std::move(rows)), selected(points.rows(), false)
{
    if (min_pairwise_distance(points) <= Dataset::kDuplicateDistance)
        throw ConfigError("candidate set: points must be pairwise distinct");
}

Eigen::MatrixXd lhd_sample(std::size_t n, std::size_t d, RngStream& rng)
{
    if (n == 0 || d == 0)
        throw ConfigError("lhd_sample: n and d must be positive");
    Eigen::MatrixXd out(n, d);
    std::vector<std::size_t> strata(n);
    const double width = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(strata));
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = static_cast<double>(strata[i]);
            double v = (s + rng.uniform()) * width;
            // rounding must not move the value out of its stratum
            while (std::floor(v * static_cast<double>(n)) > s)
                v = std::nextafter(v, 0.0);
            while (std::floor(v * static_cast<double>(n)) < s)
                v = std::nextafter(v, 1.0);
            out(i, j) = v;
        }
    }
    return out;
}

double min_pairwise_distance(const Eigen::MatrixXd& points)
{
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
    return std::sqrt(best);
}

Eigen::MatrixXd maximin_improve(Eigen::MatrixXd points, std::size_t iterations, RngStream& rng)
{
    const auto n = static_cast<std::uint64_t>(points.rows());
    const auto d = static_cast<std::uint64_t>(points.cols());
    if (n < 2 || iterations == 0)
        return points;

    double current = min_pairwise_distance(points);
    for (std::size_t it = 0; it < iterations; ++it) {
        auto col = static_cast<Eigen::Index>(rng.below(d));
        auto a = static_cast<Eigen::Index>(rng.below(n));
        auto b = static_cast<Eigen::Index>(rng.below(n - 1));
        if (b >= a)
            ++b;
        std::swap(points(a, col), points(b, col));
        double trial = min_pairwise_distance(points);
        if (trial > current)
            current = trial;
        else
            std::swap(points(a, col), points(b, col));
    }
    return points;
}

bool is_latin_hypercube(const Eigen::MatrixXd& points)
{
    const auto n = static_cast<std::size_t>(points.rows());
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        std::vector<bool> seen(n, false);
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            double v = points(i, j);
            if (!(v >= 0.0 && v < 1.0))
                return false;
            auto s = static_cast<std::size_t>(std::floor(v * static_cast<double>(n)));
            if (s >= n || seen[s])
                return false;
            seen[s] = true;
        }
    }
    return true;
}

}  // namespace optimice
