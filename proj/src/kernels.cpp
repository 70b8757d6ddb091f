#include "optimice/kernels.hpp"

#include <cmath>

namespace optimice {

namespace {

bool is_closed_form_nu(double nu) { return nu == 0.5 || nu == 1.5 || nu == 2.5; }

void check_point(const KernelConfig& cfg, const Point& x)
{
    if (static_cast<std::size_t>(x.size()) != cfg.dim())
        throw ConfigError("kernel: point dimension " + std::to_string(x.size()) + " does not match "
                          + std::to_string(cfg.dim()) + " length scales");
    if (!x.allFinite())
        throw ConfigError("kernel: non-finite coordinate");
}

// Separable correlation folded into a single exponential:
// prod_d exp(-a_d) * poly_d == exp(-sum a_d) * prod poly_d.
template <typename RowA, typename RowB>
double separable_correlation(const KernelConfig& cfg, const RowA& a, const RowB& b)
{
    const std::size_t d = cfg.dim();
    double exponent = 0.0;
    double poly = 1.0;
    if (cfg.family == KernelFamily::PowerExponential) {
        for (std::size_t i = 0; i < d; ++i) {
            double diff = std::abs(a[i] - b[i]);
            exponent += (cfg.smoothness == 2.0 ? diff * diff : std::pow(diff, cfg.smoothness)) / cfg.length_scales[i];
        }
        return std::exp(-exponent);
    }
    if (cfg.smoothness == 0.5) {
        for (std::size_t i = 0; i < d; ++i)
            exponent += std::abs(a[i] - b[i]) / cfg.length_scales[i];
        return std::exp(-exponent);
    }
    const double root = cfg.smoothness == 1.5 ? std::sqrt(3.0) : std::sqrt(5.0);
    for (std::size_t i = 0; i < d; ++i) {
        double s = root * std::abs(a[i] - b[i]) / cfg.length_scales[i];
        exponent += s;
        poly *= cfg.smoothness == 1.5 ? 1.0 + s : 1.0 + s + s * s / 3.0;
    }
    return poly * std::exp(-exponent);
}

}  // namespace

KernelConfig KernelConfig::matern(double nu, Eigen::VectorXd length_scales)
{
    KernelConfig cfg{KernelFamily::Matern, std::move(length_scales), nu};
    cfg.validate();
    return cfg;
}

KernelConfig KernelConfig::power_exponential(double p, Eigen::VectorXd length_scales)
{
    KernelConfig cfg{KernelFamily::PowerExponential, std::move(length_scales), p};
    cfg.validate();
    return cfg;
}

void KernelConfig::validate() const
{
    if (length_scales.size() == 0)
        throw ConfigError("kernel: at least one length scale required");
    for (Eigen::Index i = 0; i < length_scales.size(); ++i)
        if (!(length_scales[i] > 0.0) || !std::isfinite(length_scales[i]))
            throw ConfigError("kernel: length scales must be finite and positive");
    if (family == KernelFamily::PowerExponential) {
        if (!(smoothness > 0.0 && smoothness <= 2.0))
            throw ConfigError("kernel: power-exponential exponent must lie in (0, 2]");
    } else if (!is_closed_form_nu(smoothness)) {
        throw ConfigError("kernel: Matern order must be 0.5, 1.5 or 2.5");
    }
}

std::string to_string(KernelFamily family)
{
    return family == KernelFamily::Matern ? "matern" : "powexp";
}

KernelFamily kernel_family_from_string(const std::string& name)
{
    if (name == "matern")
        return KernelFamily::Matern;
    if (name == "powexp")
        return KernelFamily::PowerExponential;
    throw ConfigError("unknown kernel family '" + name + "' (expected matern or powexp)");
}

double correlation_1d(KernelFamily family, double smoothness, double abs_diff, double length_scale)
{
    if (family == KernelFamily::PowerExponential)
        return std::exp(-std::pow(abs_diff, smoothness) / length_scale);

    double r = abs_diff / length_scale;
    if (smoothness == 0.5)
        return std::exp(-r);
    if (smoothness == 1.5) {
        double s = std::sqrt(3.0) * r;
        return (1.0 + s) * std::exp(-s);
    }
    double s = std::sqrt(5.0) * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double kernel_eval(const KernelConfig& cfg, const Point& x, const Point& x2)
{
    check_point(cfg, x);
    check_point(cfg, x2);
    return separable_correlation(cfg, x, x2);
}

Eigen::MatrixXd kernel_cross(const KernelConfig& cfg, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (static_cast<std::size_t>(a.cols()) != cfg.dim() || static_cast<std::size_t>(b.cols()) != cfg.dim())
        throw ConfigError("kernel: point dimension does not match length scales");
    if (!a.allFinite() || !b.allFinite())
        throw ConfigError("kernel: non-finite coordinate");
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            k(i, j) = separable_correlation(cfg, a.row(i), b.row(j));
    return k;
}

Eigen::MatrixXd kernel_matrix(const KernelConfig& cfg, const Eigen::MatrixXd& rows, double jitter)
{
    if (rows.rows() == 0)
        throw ConfigError("kernel_matrix: empty point set");
    if (!(jitter >= 0.0))
        throw ConfigError("kernel_matrix: jitter must be non-negative");
    if (static_cast<std::size_t>(rows.cols()) != cfg.dim())
        throw ConfigError("kernel_matrix: point dimension does not match length scales");
    if (!rows.allFinite())
        throw ConfigError("kernel_matrix: non-finite coordinate");

    const Eigen::Index n = rows.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = 1.0 + jitter;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double v = separable_correlation(cfg, rows.row(i), rows.row(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace optimice
