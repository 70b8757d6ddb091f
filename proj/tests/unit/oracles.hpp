// Reference computations written straight from the textbook formulas, with
// explicit matrix inverses and no sharing of library internals.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double matern(double nu, double r, double l)
{
    const double a = r / l;
    if (nu == 0.5)
        return std::exp(-a);
    if (nu == 1.5)
        return (1.0 + std::sqrt(3.0) * a) * std::exp(-std::sqrt(3.0) * a);
    return (1.0 + std::sqrt(5.0) * a + 5.0 * a * a / 3.0) * std::exp(-std::sqrt(5.0) * a);
}

inline double powexp(double p, double r, double l) { return std::exp(-std::pow(r, p) / l); }

struct Kernel {
    bool matern = true;
    double smoothness = 2.5;
    Eigen::VectorXd ls;

    double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const
    {
        double v = 1.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            double r = std::abs(a[i] - b[i]);
            v *= matern ? oracle::matern(smoothness, r, ls[i]) : powexp(smoothness, r, ls[i]);
        }
        return v;
    }
};

inline Eigen::MatrixXd gram(const Kernel& k, const Eigen::MatrixXd& x, double jitter)
{
    Eigen::MatrixXd g(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            g(i, j) = k(x.row(i).transpose(), x.row(j).transpose()) + (i == j ? jitter : 0.0);
    return g;
}

inline Eigen::VectorXd cross(const Kernel& k, const Eigen::MatrixXd& x, const Eigen::VectorXd& p)
{
    Eigen::VectorXd c(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        c[i] = k(x.row(i).transpose(), p);
    return c;
}

/// Ordinary kriging on standardized outputs, GLS mean, closed-form process
/// variance (or a given one), variance sigma^2 (1 - k^T K^-1 k). The jitter
/// enters everything except the mean weights, which solve the exact system.
struct Kriging {
    Kernel kernel;
    Eigen::MatrixXd x;
    Eigen::MatrixXd kinv;
    Eigen::VectorXd weights;
    double y_mean = 0.0, y_sd = 1.0, beta = 0.0, sigma2 = 0.0;
    Eigen::VectorXd resid;

    Kriging(Kernel k, Eigen::MatrixXd xs, const Eigen::VectorXd& y, double jitter, double fixed_sigma2 = -1.0)
        : kernel(std::move(k)), x(std::move(xs))
    {
        const auto n = y.size();
        y_mean = y.mean();
        double ss = n > 1 ? (y.array() - y_mean).square().sum() / double(n - 1) : 0.0;
        y_sd = ss > 0.0 ? std::sqrt(ss) : 1.0;
        Eigen::VectorXd ys = (y.array() - y_mean) / y_sd;
        kinv = gram(kernel, x, jitter).inverse();
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        beta = ones.dot(kinv * ys) / ones.dot(kinv * ones);
        resid = ys - beta * ones;
        sigma2 = fixed_sigma2 > 0.0 ? fixed_sigma2 : std::max(resid.dot(kinv * resid) / double(n), 1e-12);
        weights = gram(kernel, x, 0.0).inverse() * resid;
    }

    double mean(const Eigen::VectorXd& p) const
    {
        return (beta + cross(kernel, x, p).dot(weights)) * y_sd + y_mean;
    }
    double variance(const Eigen::VectorXd& p) const
    {
        Eigen::VectorXd c = cross(kernel, x, p);
        return std::max(0.0, 1.0 - c.dot(kinv * c)) * sigma2 * y_sd * y_sd;
    }
    /// Correlation-scale variance given the inputs only.
    double corr_variance(const Eigen::VectorXd& p) const
    {
        Eigen::VectorXd c = cross(kernel, x, p);
        return 1.0 - c.dot(kinv * c);
    }
};

/// Profiled log-likelihood from the explicit inverse and determinant.
inline double log_likelihood(const Kernel& k, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double jitter)
{
    const auto n = double(y.size());
    Eigen::MatrixXd g = gram(k, x, jitter);
    Eigen::MatrixXd inv = g.inverse();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
    double beta = ones.dot(inv * y) / ones.dot(inv * ones);
    Eigen::VectorXd r = y - beta * ones;
    double s2 = std::max(r.dot(inv * r) / n, 1e-12);
    return -0.5 * n * std::log(2.0 * M_PI * s2) - 0.5 * n - 0.5 * std::log(g.determinant());
}

/// Correlation-scale variance of p given `rest` under K + nugget I.
inline double nugget_variance(const Kernel& k, const Eigen::MatrixXd& rest, const Eigen::VectorXd& p, double nugget)
{
    if (rest.rows() == 0)
        return 1.0;
    Eigen::MatrixXd g = gram(k, rest, nugget);
    Eigen::VectorXd c = cross(k, rest, p);
    return 1.0 - c.dot(g.inverse() * c);
}

inline Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

}  // namespace oracle

namespace oracle {

/// Exhaustive search for the fill points of one batch. Every ordered sequence
/// of K-1 picks is scored from scratch: step k's score is the correlation
/// variance given train + earlier picks (jitter on the diagonal), over the
/// variance given every other unselected candidate under K + nugget I.
/// Returns the sequence with the lexicographically largest score vector,
/// earliest enumerated on exact ties. Eligible picks are the unselected
/// `members`, or every unselected candidate once members run out.
struct MiceSearch {
    Kernel kernel;
    Eigen::MatrixXd train;
    Eigen::MatrixXd cand;
    std::vector<std::size_t> members;
    double jitter = 1e-8;
    double nugget = 1.0;

    double score(const std::vector<std::size_t>& chosen, std::size_t x) const
    {
        Eigen::MatrixXd design = train;
        for (std::size_t c : chosen)
            design = stack(design, cand.row(static_cast<Eigen::Index>(c)));
        Eigen::MatrixXd inv = gram(kernel, design, jitter).inverse();
        Eigen::VectorXd p = cand.row(static_cast<Eigen::Index>(x)).transpose();
        Eigen::VectorXd c = cross(kernel, design, p);
        double num = std::max(0.0, 1.0 - c.dot(inv * c));
        Eigen::MatrixXd rest(0, cand.cols());
        for (Eigen::Index i = 0; i < cand.rows(); ++i) {
            auto ii = static_cast<std::size_t>(i);
            if (ii == x || std::find(chosen.begin(), chosen.end(), ii) != chosen.end())
                continue;
            rest = stack(rest, cand.row(i));
        }
        return num / nugget_variance(kernel, rest, p, nugget);
    }

    std::vector<std::size_t> eligible(const std::vector<std::size_t>& chosen) const
    {
        auto free = [&](std::size_t i) { return std::find(chosen.begin(), chosen.end(), i) == chosen.end(); };
        std::vector<std::size_t> out;
        for (std::size_t i : members)
            if (free(i))
                out.push_back(i);
        if (out.empty())
            for (std::size_t i = 0; i < static_cast<std::size_t>(cand.rows()); ++i)
                if (free(i))
                    out.push_back(i);
        return out;
    }

    void search(std::vector<std::size_t>& chosen, std::vector<double>& scores, std::size_t k,
                std::vector<std::size_t>& best, std::vector<double>& best_scores) const
    {
        if (chosen.size() == k) {
            if (best.empty() || std::lexicographical_compare(best_scores.begin(), best_scores.end(), scores.begin(),
                                                             scores.end())) {
                best = chosen;
                best_scores = scores;
            }
            return;
        }
        for (std::size_t x : eligible(chosen)) {
            scores.push_back(score(chosen, x));
            chosen.push_back(x);
            search(chosen, scores, k, best, best_scores);
            chosen.pop_back();
            scores.pop_back();
        }
    }

    /// `first` is the UCB point; returns the full batch.
    std::vector<std::size_t> batch(std::size_t first, std::size_t k) const
    {
        std::vector<std::size_t> chosen{first}, best;
        std::vector<double> scores{0.0}, best_scores;
        search(chosen, scores, k, best, best_scores);
        return best;
    }
};

}  // namespace oracle
