#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimice/core.hpp"
#include "optimice/testbed.hpp"

namespace optimice {

/// One-at-a-time path through a p-level grid on [0,1]^d: d + 1 points, each
/// step moving one coordinate by +/- delta.
struct Trajectory {
    Eigen::MatrixXd points;               // (d + 1) x d, unit coordinates
    std::vector<std::size_t> perturbed;   // dimension moved by step i -> i + 1
    double delta = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
};

/// Grid step for p levels: p / (2 (p - 1)).
double morris_delta(std::size_t levels);

std::vector<Trajectory> build_trajectories(std::size_t d, std::size_t levels, std::size_t count, RngStream& rng);

/// Sum over all point pairs (one per trajectory) of Euclidean distance.
double trajectory_distance(const Trajectory& a, const Trajectory& b);

/// Indices (ascending) of the r trajectories with maximal spread
/// sqrt(sum of squared pairwise trajectory distances). Exhaustive when
/// C(M, r) <= 1e5, greedy backward elimination otherwise.
std::vector<std::size_t> ot_select_indices(const std::vector<Trajectory>& trajectories, std::size_t r);
std::vector<Trajectory> ot_select(const std::vector<Trajectory>& trajectories, std::size_t r);

/// One difference quotient per dimension, in unit coordinates.
Eigen::VectorXd elementary_effects(const Trajectory& traj, const Eigen::VectorXd& values);

enum class InfluenceClass { Negligible, Linear, Monotonic, Nonlinear, Interaction };
std::string to_string(InfluenceClass c);

/// Negligible below 5% of the largest mu*; otherwise banded by sigma / mu*:
/// < 0.1 linear, [0.1, 0.5) monotonic, [0.5, 1] nonlinear, > 1 interaction.
InfluenceClass classify(double mu_star, double sigma, double mu_star_max);

struct MorrisResult {
    std::vector<std::string> names;
    Eigen::VectorXd mu;
    Eigen::VectorXd mu_star;
    Eigen::VectorXd sigma;
    std::vector<InfluenceClass> classes;
    std::size_t r = 0;
    Eigen::MatrixXd effects;  // r x d
    std::vector<Trajectory> trajectories;
    std::size_t evaluations = 0;
};

/// Per-input statistics from a raw r x d effects matrix. sigma uses the
/// r - 1 denominator.
MorrisResult summarize_effects(const Eigen::MatrixXd& effects, std::vector<std::string> names);

struct MorrisOptions {
    std::size_t r = 4;
    std::size_t levels = 4;
    std::size_t pool = 100;
    std::size_t parallelism = 1;
};

/// Full screening: build a pool, keep the r most spread trajectories,
/// evaluate their r (d + 1) points and summarize.
MorrisResult screen(const Objective& objective, const ParameterSpace& space, const MorrisOptions& options,
                    RngStream& rng);

struct RobustnessRow {
    std::size_t r = 0;
    std::string input;
    double mu_star = 0.0;
    double stderr_ = 0.0;  // standard error of mu*
};

/// screen() once per r (stream derived per r); mu* with standard errors.
std::vector<RobustnessRow> robustness_study(const Objective& objective, const ParameterSpace& space,
                                            const std::vector<std::size_t>& r_values, const MorrisOptions& options,
                                            RngStream& rng);

/// input,mu,mu_star,sigma,ratio,class,r
void write_screening_csv(std::ostream& out, const MorrisResult& result);
/// r,input,mu_star,stderr
void write_robustness_csv(std::ostream& out, const std::vector<RobustnessRow>& rows);

}  // namespace optimice
