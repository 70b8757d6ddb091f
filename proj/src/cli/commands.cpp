#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "optimice/analysis.hpp"
#include "optimice/cli.hpp"
#include "optimice/svg.hpp"

namespace optimice {

namespace fs = std::filesystem;

namespace {

std::string safe_name(const std::string& s)
{
    std::string out = s;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            c = '_';
    return out;
}

std::vector<double> column(const std::vector<EvaluationRecord>& records, double EvaluationRecord::*field)
{
    std::vector<double> out;
    for (const auto& r : records)
        out.push_back(r.*field);
    return out;
}

std::vector<double> counting(std::size_t n)
{
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<double>(i + 1);
    return out;
}

std::string trace_csv(const OptimizationTrace& trace)
{
    std::ostringstream ss;
    write_trace_csv(ss, trace);
    return ss.str();
}

double median(std::vector<double> v) { return box_stats(std::move(v)).median; }

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial)
{
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1));
}

BoxStats box_stats(std::vector<double> values)
{
    if (values.empty())
        throw ConfigError("box_stats: no values");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(values.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        std::size_t hi = std::min(lo + 1, values.size() - 1);
        double frac = pos - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    BoxStats b;
    b.min = values.front();
    b.max = values.back();
    b.q1 = quantile(0.25);
    b.median = quantile(0.5);
    b.q3 = quantile(0.75);
    double s = 0.0;
    for (double v : values)
        s += v;
    b.mean = s / static_cast<double>(values.size());
    return b;
}

void write_file_atomic(const fs::path& path, const std::string& contents)
{
    static std::atomic<unsigned> counter{0};
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out)
            throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

int guarded(const std::function<void()>& body, std::ostream& err)
{
    try {
        body();
        return kExitOk;
    } catch (const EvaluationError& e) {
        err << "evaluation error: " << e.what() << " at (";
        for (Eigen::Index i = 0; i < e.point().size(); ++i)
            err << (i ? ", " : "") << format_double(e.point()[i]);
        err << ")";
        if (!e.raw_output().empty())
            err << "; evaluator output: " << e.raw_output();
        err << "\n";
        return kExitEvaluation;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

BenchmarkResult run_benchmark(const RunConfig& config, std::size_t workers)
{
    if (config.trials < 2)
        throw ConfigError("benchmark: trials must be at least 2");
    if (config.schemes.empty())
        throw ConfigError("benchmark: no schemes given");
    const ParameterSpace space = config.make_space();
    const Objective objective = config.make_objective();
    config.optimizer.validate(space.dim());

    BenchmarkResult result;
    result.schemes = config.schemes;
    if (objective.known_maximum())
        result.f_star = objective.known_maximum()->value;
    const std::size_t trials = config.trials;
    const std::size_t jobs = config.schemes.size() * trials;
    result.traces.assign(config.schemes.size(), std::vector<OptimizationTrace>(trials));

    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, jobs);
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto work = [&] {
        while (!failed.load()) {
            std::size_t job = next.fetch_add(1);
            if (job >= jobs)
                return;
            const std::size_t s = job / trials;
            const std::size_t t = job % trials;
            try {
                OptimizerConfig cfg = config.optimizer;
                cfg.scheme = config.schemes[s];
                cfg.seed = trial_seed(config.optimizer.seed, t);
                result.traces[s][t] = run(space, objective, cfg);
            } catch (...) {
                errors[job] = std::current_exception();
                failed.store(true);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return result;
}

void cmd_optimize(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const ParameterSpace space = config.make_space();
    const Objective objective = config.make_objective();
    const OptimizerConfig& cfg = config.optimizer;
    log << "optimize: " << objective.name() << ", " << to_string(cfg.scheme) << ", budget "
        << cfg.budget(space.dim()) << ", seed " << cfg.seed << "\n";

    OptimizationTrace trace = run(space, objective, cfg);
    fs::create_directories(out);
    write_file_atomic(out / "trace.csv", trace_csv(trace));

    const EvaluationRecord& best = trace.incumbent();
    std::ostringstream summary;
    summary << "objective = " << objective.name() << "\n"
            << "scheme = " << to_string(cfg.scheme) << "\n"
            << "seed = " << cfg.seed << "\n"
            << "evaluations = " << trace.records.size() << "\n"
            << "incumbent_y = " << format_double(best.y) << "\n";
    for (std::size_t j = 0; j < space.dim(); ++j)
        summary << "incumbent." << space[j].name << " = " << format_double(best.x[static_cast<Eigen::Index>(j)])
                << "\n";
    if (trace.f_star) {
        summary << "f_star = " << format_double(*trace.f_star) << "\n"
                << "simple_regret = " << format_double(simple_regret(*trace.f_star, best.y)) << "\n";
        auto reached = evaluations_to_regret(trace, 1.0);
        summary << "evaluations_to_regret_1 = " << (reached ? std::to_string(*reached) : "never") << "\n";
    }
    write_file_atomic(out / "summary.txt", summary.str());

    if (trace.f_star) {
        Series s{"simple regret", counting(trace.records.size()), column(trace.records, &EvaluationRecord::simple_regret),
                 {}, Series::Style::Line};
        write_file_atomic(out / "regret.svg",
                          render_svg({objective.name() + " " + to_string(cfg.scheme), "evaluation", "simple regret",
                                      true},
                                     {s}));
    }

    SavedEmulator saved = final_emulator(space, trace, cfg);
    std::ostringstream model;
    save_emulator(model, saved);
    write_file_atomic(out / "model.txt", model.str());
    log << "incumbent y = " << format_double(best.y) << "\n";
}

void cmd_benchmark(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const ParameterSpace space = config.make_space();
    log << "benchmark: " << config.objective << ", " << config.trials << " trials, budget "
        << config.optimizer.budget(space.dim()) << "\n";
    BenchmarkResult res = run_benchmark(config);
    fs::create_directories(out);

    const std::size_t width = std::max<std::size_t>(2, std::to_string(config.trials).size());
    std::ostringstream mean_csv, box_csv;
    mean_csv << "scheme,evaluation,mean_incumbent_y,mean_simple_regret\n";
    box_csv << "scheme,min,q1,median,q3,max,mean\n";
    std::vector<Series> curves;

    for (std::size_t s = 0; s < res.schemes.size(); ++s) {
        const std::string name = to_string(res.schemes[s]);
        const auto& traces = res.traces[s];
        for (std::size_t t = 0; t < traces.size(); ++t) {
            std::ostringstream file;
            file << name << "_trial" << std::setw(static_cast<int>(width)) << std::setfill('0') << (t + 1) << ".csv";
            write_file_atomic(out / file.str(), trace_csv(traces[t]));
        }
        const std::size_t n = traces.front().records.size();
        Series curve{name, counting(n), {}, {}, Series::Style::Line};
        for (std::size_t e = 0; e < n; ++e) {
            double inc = 0.0, reg = 0.0;
            for (const auto& tr : traces) {
                inc += tr.records[e].incumbent_y;
                reg += tr.records[e].simple_regret;
            }
            inc /= static_cast<double>(traces.size());
            reg /= static_cast<double>(traces.size());
            mean_csv << name << "," << (e + 1) << "," << format_double(inc) << "," << format_double(reg) << "\n";
            curve.y.push_back(res.f_star ? reg : inc);
        }
        curves.push_back(std::move(curve));

        std::vector<double> finals;
        for (const auto& tr : traces)
            finals.push_back(tr.incumbent().y);
        BoxStats b = box_stats(finals);
        box_csv << name << "," << format_double(b.min) << "," << format_double(b.q1) << "," << format_double(b.median)
                << "," << format_double(b.q3) << "," << format_double(b.max) << "," << format_double(b.mean) << "\n";

        log << name << ": median best y = " << format_double(b.median);
        if (res.f_star) {
            std::vector<double> reach;
            for (const auto& tr : traces) {
                auto r = evaluations_to_regret(tr, 1.0);
                reach.push_back(r ? static_cast<double>(*r) : std::numeric_limits<double>::infinity());
            }
            log << ", median evaluations to regret < 1: " << format_double(median(reach));
        }
        log << "\n";
    }
    write_file_atomic(out / "mean_regret.csv", mean_csv.str());
    write_file_atomic(out / "boxplot.csv", box_csv.str());
    write_file_atomic(out / "benchmark.svg",
                      render_svg({config.objective + ": mean over " + std::to_string(config.trials) + " trials",
                                  "evaluation", res.f_star ? "mean simple regret" : "mean incumbent y",
                                  res.f_star.has_value()},
                                 curves));
}

void cmd_screen(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const ParameterSpace space = config.make_space();
    const Objective objective = config.make_objective();
    MorrisOptions opts = config.morris;
    opts.parallelism = std::max<std::size_t>(config.optimizer.parallelism, 1);
    RngStream rng(config.optimizer.seed, "morris");
    fs::create_directories(out);
    const std::uint64_t before = evaluation_count();
    std::size_t evaluations = 0;

    if (config.r_values.empty()) {
        MorrisResult res = screen(objective, space, opts, rng);
        evaluations = res.evaluations;
        std::ostringstream csv;
        write_screening_csv(csv, res);
        write_file_atomic(out / "screening.csv", csv.str());
        std::vector<Series> points;
        for (std::size_t j = 0; j < res.names.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            points.push_back({res.names[j], {res.mu_star[jj]}, {res.sigma[jj]}, {}, Series::Style::Points});
        }
        write_file_atomic(out / "screening.svg",
                          render_svg({"Morris screening, r = " + std::to_string(res.r), "mu*", "sigma", false}, points));
        for (std::size_t j = 0; j < res.names.size(); ++j)
            log << res.names[j] << ": mu* = " << format_double(res.mu_star[static_cast<Eigen::Index>(j)]) << ", "
                << to_string(res.classes[j]) << "\n";
    } else {
        std::vector<RobustnessRow> rows = robustness_study(objective, space, config.r_values, opts, rng);
        for (std::size_t r : config.r_values)
            evaluations += r * (space.dim() + 1);
        std::ostringstream csv;
        write_robustness_csv(csv, rows);
        write_file_atomic(out / "robustness.csv", csv.str());
        std::vector<Series> bars;
        for (const auto& name : space.names()) {
            Series s{name, {}, {}, {}, Series::Style::Points};
            for (const auto& row : rows)
                if (row.input == name) {
                    s.x.push_back(static_cast<double>(row.r));
                    s.y.push_back(row.mu_star);
                    s.err.push_back(row.stderr_);
                }
            bars.push_back(std::move(s));
        }
        write_file_atomic(out / "robustness.svg",
                          render_svg({"Morris robustness", "trajectories r", "mu* +/- standard error", false}, bars));
    }
    log << "evaluations: " << evaluations << " (counter " << (evaluation_count() - before) << ")\n";
}

void cmd_sweep(const fs::path& model_path, const RunConfig& config, const fs::path& out, std::ostream& log)
{
    std::ifstream in(model_path);
    if (!in)
        throw ConfigError("cannot read model '" + model_path.string() + "'");
    SavedEmulator saved = load_emulator(in);
    const ParameterSpace& space = saved.space;

    Point center;
    if (config.sweep_center) {
        const auto& c = *config.sweep_center;
        center = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
        if (c.size() != space.dim())
            throw ConfigError("sweep.center has " + std::to_string(c.size()) + " values, model has "
                              + std::to_string(space.dim()) + " inputs");
    } else if (saved.incumbent) {
        center = *saved.incumbent;
    } else {
        throw ConfigError("model stores no incumbent; set sweep.center");
    }

    const std::uint64_t predictions_before = prediction_count();
    const std::uint64_t evaluations_before = evaluation_count();
    std::vector<SweepCurve> panel = local_panel(saved.model, space, center, config.sweep_n);
    const std::uint64_t predictions = prediction_count() - predictions_before;

    fs::create_directories(out);
    for (const auto& curve : panel) {
        const std::string& name = space[curve.dim].name;
        std::ostringstream csv;
        write_sweep_csv(csv, curve, space);
        write_file_atomic(out / ("sweep_" + safe_name(name) + ".csv"), csv.str());
        Series s{name, {}, {}, {}, Series::Style::Line};
        for (Eigen::Index i = 0; i < curve.abscissa.size(); ++i) {
            s.x.push_back(curve.abscissa[i]);
            s.y.push_back(curve.mean[i]);
            s.err.push_back(2.0 * curve.sd[i]);
        }
        write_file_atomic(out / ("sweep_" + safe_name(name) + ".svg"),
                          render_svg({"local sensitivity: " + name, name, "emulator mean +/- 2 sd", false}, {s}));
    }
    log << "predictions: " << predictions << ", evaluations: " << (evaluation_count() - evaluations_before) << "\n";
}

}  // namespace optimice
