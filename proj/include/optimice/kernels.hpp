#pragma once

#include <string>

#include <Eigen/Core>

#include "optimice/core.hpp"

namespace optimice {

enum class KernelFamily { PowerExponential, Matern };

/// Correlation function configuration. Length scales are in unit-hypercube
/// coordinates, one per input dimension.
///
/// `smoothness` is the exponent p in (0, 2] for the power-exponential family
/// and the Matérn order nu, restricted to 0.5, 1.5 or 2.5.
struct KernelConfig {
    KernelFamily family = KernelFamily::Matern;
    Eigen::VectorXd length_scales;
    double smoothness = 2.5;

    static KernelConfig matern(double nu, Eigen::VectorXd length_scales);
    static KernelConfig power_exponential(double p, Eigen::VectorXd length_scales);

    std::size_t dim() const { return static_cast<std::size_t>(length_scales.size()); }

    /// Throws ConfigError when an invariant is broken.
    void validate() const;
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// One-dimensional correlation at distance |dx| with length scale l.
double correlation_1d(KernelFamily family, double smoothness, double abs_diff, double length_scale);

/// Separable correlation between two unit-coordinate points.
double kernel_eval(const KernelConfig& cfg, const Point& x, const Point& x2);

/// Correlation matrix over the rows of `rows`, plus `jitter` on the diagonal.
Eigen::MatrixXd kernel_matrix(const KernelConfig& cfg, const Eigen::MatrixXd& rows, double jitter);

/// Cross-correlation block: entry (i, j) = k(a_i, b_j).
Eigen::MatrixXd kernel_cross(const KernelConfig& cfg, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace optimice
