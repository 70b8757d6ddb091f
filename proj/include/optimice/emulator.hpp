#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "optimice/core.hpp"
#include "optimice/kernels.hpp"

namespace optimice {

/// Settings for `fit`. Length scales live in unit coordinates and are searched
/// in log space inside [min_length_scale, max_length_scale].
struct FitOptions {
    KernelFamily family = KernelFamily::Matern;
    double smoothness = 2.5;
    /// When set, length scales are not estimated.
    std::optional<Eigen::VectorXd> fixed_length_scales;
    /// When set, the process variance is not estimated (standardized units).
    std::optional<double> fixed_process_variance;
    double jitter = 1e-8;
    double max_jitter = 1e-4;
    std::size_t starts = 10;
    std::size_t max_iterations = 200;
    double min_length_scale = 1e-2;
    double max_length_scale = 1e2;
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Affine map between natural outputs and the standardized outputs the GP sees.
struct Standardization {
    double mean = 0.0;
    double sd = 1.0;
};

/// Fitted ordinary-kriging emulator over unit-coordinate inputs.
///
/// The training outputs are stored standardized. The correlation matrix is
/// factorized once (K + jitter I = L L^T) and every prediction reuses it.
/// Instances are immutable; `with_fantasy` returns a new model.
class GpModel {
public:
    static constexpr double kVarianceFloor = 1e-12;

    /// Condition on `data` (unit inputs, natural outputs) with fixed kernel
    /// hyperparameters. The process variance is estimated in closed form unless
    /// given. Jitter escalates x10 up to `max_jitter` if factorization fails.
    static GpModel condition(const Dataset& data, const KernelConfig& kernel, double jitter, double max_jitter,
                             std::optional<double> process_variance = std::nullopt,
                             std::optional<Standardization> standardization = std::nullopt);

    const KernelConfig& kernel() const { return kernel_; }
    double mean_coeff() const { return beta_; }
    double process_variance() const { return sigma2_; }
    double jitter() const { return jitter_; }
    const Standardization& standardization() const { return standardization_; }
    /// Unit-coordinate inputs and standardized outputs.
    const Dataset& train() const { return train_; }
    const Eigen::MatrixXd& cholesky_lower() const { return chol_; }
    bool is_fantasy() const { return fantasy_; }
    std::size_t dim() const { return kernel_.dim(); }

    /// Process variance expressed in natural output units.
    double output_variance() const { return sigma2_ * standardization_.sd * standardization_.sd; }

    Prediction predict(const Point& x) const;

    /// Mean and variance for every row of `x` (natural output units).
    void predict_many(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

    /// Predictive variance only, natural units.
    Eigen::VectorXd variance_many(const Eigen::MatrixXd& x) const;

    /// Variance as a fraction of the process variance, before clamping.
    Eigen::VectorXd raw_correlation_variance(const Eigen::MatrixXd& x) const;

    /// Model whose predictive variance equals that of a model also trained on
    /// `x_new`. The stored output is a placeholder; do not read its mean.
    GpModel with_fantasy(const Point& x_new) const;

private:
    GpModel() = default;

    KernelConfig kernel_;
    double beta_ = 0.0;
    double sigma2_ = kVarianceFloor;
    double jitter_ = 0.0;
    Standardization standardization_;
    Dataset train_;
    Eigen::MatrixXd inputs_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;  // (K + jitter I)^{-1} (y - beta)
    bool fantasy_ = false;
};

/// Profiled Gaussian log marginal likelihood of `data` under a constant mean,
/// with the mean and process variance replaced by their closed-form
/// estimates. Outputs are used as given (no standardization).
/// Throws NumericalError naming the jitter when factorization fails.
double log_likelihood(const Dataset& data, const KernelConfig& kernel, double jitter);

/// Maximum-likelihood fit: multi-start Nelder-Mead over log length scales,
/// starts drawn from an LHD of the log-length-scale box.
/// `data` holds unit-coordinate inputs and natural outputs.
GpModel fit(const Dataset& data, const FitOptions& options, RngStream& rng);

/// Out-of-place update; see GpModel::with_fantasy.
inline GpModel fantasy_variance_update(const GpModel& model, const Point& x_new)
{
    return model.with_fantasy(x_new);
}

/// Total number of `predict`/`predict_many` rows evaluated by this process.
std::uint64_t prediction_count();

/// Emulator plus the context needed to reuse it outside the optimizer.
struct SavedEmulator {
    ParameterSpace space;
    GpModel model;
    std::optional<Point> incumbent;  // natural units
};

/// Versioned text format, first line "optimice-gp 1".
void save_emulator(std::ostream& out, const SavedEmulator& saved);
SavedEmulator load_emulator(std::istream& in);

}  // namespace optimice
