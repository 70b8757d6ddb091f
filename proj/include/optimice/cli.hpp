#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "optimice/core.hpp"
#include "optimice/morris.hpp"
#include "optimice/optimizer.hpp"
#include "optimice/testbed.hpp"

namespace optimice {

/// Flat `key = value` run settings. Lines whose first non-blank character is
/// `#` are comments; unknown or repeated keys are errors.
struct RunConfig {
    std::string objective = "branin";  // builtin name or "external"
    std::optional<ExternalCommand> external;
    std::vector<Dimension> space;      // empty: the builtin's own box
    bool negate = false;               // external objectives only
    std::optional<double> known_max;   // external objectives only
    OptimizerConfig optimizer;
    std::vector<Scheme> schemes{Scheme::OptimMICE, Scheme::UcbAlm};
    std::size_t trials = 20;
    std::filesystem::path output_dir = "out";
    MorrisOptions morris;
    std::vector<std::size_t> r_values;  // non-empty: robustness mode
    std::size_t sweep_n = 125;
    std::optional<std::vector<double>> sweep_center;

    ParameterSpace make_space() const;
    Objective make_objective() const;
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Keys accepted by parse_config, with `space.<name>.lower|upper` shown once.
std::vector<std::string> config_keys();

/// Trial seeds: splitmix64(master + 0x9E3779B97F4A7C15 * (trial + 1)).
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);

struct BenchmarkResult {
    std::vector<Scheme> schemes;
    std::vector<std::vector<OptimizationTrace>> traces;  // [scheme][trial]
    std::optional<double> f_star;
};

/// Every scheme x trial, trials spread over `workers` threads (0: hardware).
BenchmarkResult run_benchmark(const RunConfig& config, std::size_t workers = 0);

/// Five-number summary plus mean.
struct BoxStats {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};
/// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitEvaluation = 2, kExitNumerical = 3 };

/// Runs `body`, mapping ConfigError / EvaluationError / NumericalError (and
/// I/O failures) to exit codes with a one-line diagnostic on `err`.
int guarded(const std::function<void()>& body, std::ostream& err);

/// trace.csv, summary.txt, regret.svg (when f* is known), model.txt
void cmd_optimize(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// <scheme>_trialNN.csv, mean_regret.csv, boxplot.csv, benchmark.svg
void cmd_benchmark(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// screening.csv + screening.svg, or robustness.csv + robustness.svg
void cmd_screen(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// sweep_<dim>.csv + sweep_<dim>.svg per input
void cmd_sweep(const std::filesystem::path& model, const RunConfig& config, const std::filesystem::path& out,
               std::ostream& log);

}  // namespace optimice
