#pragma once

#include <vector>

#include <Eigen/Core>

#include "optimice/core.hpp"

namespace optimice {

/// Finite candidate grid in unit coordinates. `selected` tracks which
/// candidates have already joined the current batch.
struct CandidateSet {
    Eigen::MatrixXd points;  // one candidate per row
    std::vector<bool> selected;

    CandidateSet() = default;
    explicit CandidateSet(Eigen::MatrixXd rows);

    std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
    Point point(std::size_t i) const { return points.row(static_cast<Eigen::Index>(i)).transpose(); }
};

/// Latin hypercube sample of n points in [0,1)^d: every dimension has exactly
/// one point in each stratum [i/n, (i+1)/n), jittered uniformly inside it.
/// Rows are points.
Eigen::MatrixXd lhd_sample(std::size_t n, std::size_t d, RngStream& rng);

/// Smallest pairwise Euclidean distance between rows (infinity for < 2 rows).
double min_pairwise_distance(const Eigen::MatrixXd& points);

/// Exchange heuristic: pick a random column and two random rows, swap the two
/// entries, keep the swap only if the minimum pairwise distance grows.
/// Column swaps keep every stratum occupied, so the result is still an LHD.
Eigen::MatrixXd maximin_improve(Eigen::MatrixXd points, std::size_t iterations, RngStream& rng);

/// True when every column of `points` has exactly one entry per stratum.
bool is_latin_hypercube(const Eigen::MatrixXd& points);

}  // namespace optimice
