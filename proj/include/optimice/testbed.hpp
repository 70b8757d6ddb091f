#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optimice/core.hpp"

namespace optimice {

/// A failed objective evaluation. Carries the offending point (natural
/// units) and whatever raw output the evaluator produced.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, Point point, std::string raw_output = {});

    const Point& point() const { return point_; }
    const std::string& raw_output() const { return raw_; }

private:
    Point point_;
    std::string raw_;
};

/// Known global maximum of a (possibly negated) objective.
struct KnownMaximum {
    double value = 0.0;
    std::vector<Point> argmax;
};

/// Minimized canonical benchmarks.
double branin(const Point& x);
double rosenbrock(const Point& x);

/// Subprocess evaluator: the child gets one line of space-separated
/// coordinates on stdin and must print one finite number on stdout, exit 0.
struct ExternalCommand {
    std::string command;  // run through /bin/sh -c
    std::chrono::milliseconds timeout{600'000};
};

double eval_external(const ExternalCommand& cmd, const Point& x);

/// Something to maximize over a parameter space.
class Objective {
public:
    using Function = std::function<double(const Point&)>;

    /// Registered builtin, already negated when the benchmark is a minimization.
    /// `dim` selects the dimension for the dimension-free benchmarks
    /// (0 means the default).
    static Objective builtin(const std::string& name, std::size_t dim = 0);
    static Objective external(ExternalCommand cmd, ParameterSpace space, bool negate = false,
                              std::optional<double> known_max = std::nullopt);
    static Objective from_function(std::string name, Function f, ParameterSpace space,
                                   std::optional<KnownMaximum> known_max = std::nullopt, bool negate = false);

    const std::string& name() const { return name_; }
    const ParameterSpace& space() const { return space_; }
    const std::optional<KnownMaximum>& known_maximum() const { return known_max_; }
    bool negated() const { return negate_; }
    bool is_external() const { return external_.has_value(); }

    /// Copy of this objective evaluated over a different box.
    Objective with_space(ParameterSpace space) const;

    /// Value to maximize at natural-unit point x.
    double operator()(const Point& x) const;

private:
    std::string name_;
    Function f_;
    ParameterSpace space_;
    std::optional<KnownMaximum> known_max_;
    std::optional<ExternalCommand> external_;
    bool negate_ = false;
};

/// Names accepted by Objective::builtin.
std::vector<std::string> builtin_names();

/// Evaluate `objective` at a point of a registered builtin.
double eval_builtin(const std::string& name, const Point& x);

/// Evaluate all points with at most `parallelism` concurrent calls. Results
/// follow input order. Any failure fails the batch once in-flight calls have
/// drained; the error of the lowest failing index is rethrown.
std::vector<double> batch_evaluate(const Objective& objective, const std::vector<Point>& points,
                                   std::size_t parallelism);

/// Total objective evaluations performed through Objective::operator().
std::uint64_t evaluation_count();

}  // namespace optimice
