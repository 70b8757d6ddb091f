#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "optimice/core.hpp"
#include "optimice/emulator.hpp"

namespace optimice {

/// One-at-a-time emulator response along a single input.
struct SweepCurve {
    std::size_t dim = 0;
    Eigen::VectorXd abscissa;  // natural units, equispaced over [lower, upper]
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    Point center;  // natural units
};

/// Predicts on n equispaced values of dimension `dim`, every other input held
/// at `center`. Emulator only; the objective is never called.
SweepCurve oat_sweep(const GpModel& model, const ParameterSpace& space, const Point& center, std::size_t dim,
                     std::size_t n);

/// oat_sweep for every dimension in order, d * n_per_dim predictions.
std::vector<SweepCurve> local_panel(const GpModel& model, const ParameterSpace& space, const Point& center,
                                    std::size_t n_per_dim = 125);

/// dim_name,x,mean,sd
void write_sweep_csv(std::ostream& out, const SweepCurve& curve, const ParameterSpace& space);

}  // namespace optimice
