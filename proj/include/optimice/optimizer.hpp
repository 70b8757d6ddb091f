#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "optimice/acquisition.hpp"
#include "optimice/core.hpp"
#include "optimice/emulator.hpp"
#include "optimice/testbed.hpp"

namespace optimice {

enum class Scheme { OptimMICE, UcbAlm };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct OptimizerConfig {
    std::size_t iterations = 10;
    std::size_t batch_size = 4;
    std::size_t candidate_count = 0;      // 0: 200 * d
    std::size_t initial_design_size = 0;  // 0: 10 * d
    std::size_t maximin_iterations = 200;
    FitOptions fit;
    double beta_delta = 0.1;
    std::optional<double> beta_override;
    double nugget = 1.0;
    bool region_update = false;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::OptimMICE;
    std::size_t parallelism = 0;  // 0: batch size

    /// Copy with every zero default resolved for a d-dimensional space.
    OptimizerConfig resolved(std::size_t d) const;
    /// Throws ConfigError when the resolved settings are inconsistent.
    void validate(std::size_t d) const;
    std::size_t budget(std::size_t d) const;
};

struct EvaluationRecord {
    std::size_t iteration = 0;  // 0 for the initial design
    std::size_t k = 0;          // position within the batch (or design)
    Provenance provenance = Provenance::Design;
    Point x;                    // natural units
    double y = 0.0;
    double incumbent_y = 0.0;
    double simple_regret = std::numeric_limits<double>::quiet_NaN();
    double cumulative_regret = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
};

struct IterationSummary {
    std::size_t iteration = 0;
    Point incumbent_x;
    double incumbent_y = 0.0;
    double beta = 0.0;
    std::size_t region_size = 0;
};

struct OptimizationTrace {
    std::vector<std::string> dim_names;
    std::optional<double> f_star;
    std::vector<EvaluationRecord> records;
    std::vector<IterationSummary> iterations;

    const EvaluationRecord& incumbent() const;
};

/// Batch optimization loop: initial LHD, then per iteration fit, fresh
/// candidate LHD, bounds, UCB point, relevant region, batch fill (MICE or
/// ALM), concurrent evaluation. The objective is evaluated over `space`.
OptimizationTrace run(const ParameterSpace& space, const Objective& objective, const OptimizerConfig& cfg);

/// Emulator fitted on every evaluation in the trace, used for post-run
/// sensitivity sweeps. Incumbent stored alongside.
SavedEmulator final_emulator(const ParameterSpace& space, const OptimizationTrace& trace, const OptimizerConfig& cfg);

double simple_regret(double f_star, double y_best);

/// Sum over all evaluations of f_star - y.
double cumulative_regret(const OptimizationTrace& trace, double f_star);

/// Index (1-based evaluation count) at which the incumbent regret first drops
/// below `threshold`, or nullopt if it never does.
std::optional<std::size_t> evaluations_to_regret(const OptimizationTrace& trace, double threshold);

/// CSV: iter,k,provenance,<dims...>,y,incumbent_y,simple_regret,cumulative_regret,beta
void write_trace_csv(std::ostream& out, const OptimizationTrace& trace);
OptimizationTrace read_trace_csv(std::istream& in);

}  // namespace optimice
