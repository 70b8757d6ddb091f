#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "optimice/design.hpp"
#include "optimice/emulator.hpp"

namespace optimice {

/// GP-UCB exploration weight for a finite candidate set:
/// 2 log(|G| t^2 pi^2 / (6 delta)).
double beta_schedule(std::size_t t, std::size_t candidate_count, double delta);

struct ConfidenceBounds {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    Eigen::VectorXd upper;
    Eigen::VectorXd lower;
    double beta = 0.0;
};

/// Bounds from precomputed means and standard deviations.
ConfidenceBounds make_bounds(Eigen::VectorXd mean, Eigen::VectorXd sd, double beta);

/// mean +/- sqrt(beta) * sd at every candidate.
ConfidenceBounds confidence_bounds(const GpModel& model, double beta, const CandidateSet& candidates);

/// Index maximizing the upper bound; lowest index wins ties.
std::size_t ucb_select(const ConfidenceBounds& bounds);

/// Candidates whose upper bound reaches the best lower bound.
struct RelevantRegion {
    std::vector<std::size_t> members;  // ascending
    double y_bullet = 0.0;
    std::size_t x_bullet = 0;

    bool contains(std::size_t i) const;
};

RelevantRegion relevant_region(const ConfidenceBounds& bounds);

/// MICE ratio for candidate `x`, computed directly:
/// variance of x under `model_t` divided by the variance of x under a GP on
/// the candidates `rest` alone, with `nugget` added to their correlation
/// diagonal. Both variances use the model's kernel and process variance.
double mice_score(const GpModel& model_t, const CandidateSet& candidates, std::size_t x,
                  std::span<const std::size_t> rest, double nugget);

enum class Provenance { Design, UCB, MICE, ALM };
std::string to_string(Provenance p);

enum class FillRule { Mice, Alm };

struct Batch {
    std::vector<std::size_t> indices;  // into the candidate set
    std::vector<Point> points;         // unit coordinates
    std::vector<Provenance> provenance;

    std::size_t size() const { return indices.size(); }
};

struct BatchOptions {
    std::size_t batch_size = 1;
    double nugget = 1.0;
    FillRule rule = FillRule::Mice;
    /// Recompute region membership from the fantasy variances after every
    /// pick instead of freezing it for the whole batch.
    bool region_update = false;
};

/// First point by UCB over all candidates, the remaining K-1 greedily from
/// the unselected region members (all unselected candidates once the region
/// is exhausted), re-conditioning the variance on each pick.
/// Marks the chosen candidates as selected.
Batch select_batch(const GpModel& model, const ConfidenceBounds& bounds, const RelevantRegion& region,
                   CandidateSet& candidates, const BatchOptions& options);

Batch mice_select_batch(const GpModel& model, const ConfidenceBounds& bounds, const RelevantRegion& region,
                        CandidateSet& candidates, std::size_t batch_size, double nugget);

/// Region member with the largest predictive variance; lowest index on ties.
/// Selected candidates are skipped.
std::size_t alm_select(const GpModel& model, const RelevantRegion& region, const CandidateSet& candidates);

}  // namespace optimice
