#include "optimice/analysis.hpp"

#include <ostream>

namespace optimice {

SweepCurve oat_sweep(const GpModel& model, const ParameterSpace& space, const Point& center, std::size_t dim,
                     std::size_t n)
{
    if (model.dim() != space.dim())
        throw ConfigError("oat_sweep: model and space dimensions differ");
    if (dim >= space.dim())
        throw ConfigError("oat_sweep: dimension " + std::to_string(dim) + " out of range");
    if (n < 2)
        throw ConfigError("oat_sweep: grid needs at least two points");
    if (static_cast<std::size_t>(center.size()) != space.dim() || !space.contains(center, 1e-12))
        throw ConfigError("oat_sweep: center lies outside the parameter space");

    const Dimension& dm = space[dim];
    const auto rows = static_cast<Eigen::Index>(n);
    SweepCurve curve;
    curve.dim = dim;
    curve.center = center;
    curve.abscissa.resize(rows);
    const double step = (dm.upper - dm.lower) / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < rows; ++i)
        curve.abscissa[i] = dm.lower + static_cast<double>(i) * step;
    curve.abscissa[rows - 1] = dm.upper;

    Eigen::MatrixXd grid(rows, static_cast<Eigen::Index>(space.dim()));
    for (Eigen::Index i = 0; i < rows; ++i) {
        Point p = center;
        p[static_cast<Eigen::Index>(dim)] = curve.abscissa[i];
        grid.row(i) = space.to_unit(p).transpose();
    }
    Eigen::VectorXd variance;
    model.predict_many(grid, curve.mean, variance);
    curve.sd = variance.cwiseSqrt();
    return curve;
}

std::vector<SweepCurve> local_panel(const GpModel& model, const ParameterSpace& space, const Point& center,
                                    std::size_t n_per_dim)
{
    std::vector<SweepCurve> out;
    for (std::size_t j = 0; j < space.dim(); ++j)
        out.push_back(oat_sweep(model, space, center, j, n_per_dim));
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepCurve& curve, const ParameterSpace& space)
{
    out << "dim_name,x,mean,sd\n";
    const std::string& name = space[curve.dim].name;
    for (Eigen::Index i = 0; i < curve.abscissa.size(); ++i)
        out << name << "," << format_double(curve.abscissa[i]) << "," << format_double(curve.mean[i]) << ","
            << format_double(curve.sd[i]) << "\n";
}

}  // namespace optimice
