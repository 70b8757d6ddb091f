#include "optimice/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "optimice/design.hpp"

namespace optimice {

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

Provenance provenance_from_string(const std::string& s)
{
    for (auto p : {Provenance::Design, Provenance::UCB, Provenance::MICE, Provenance::ALM})
        if (to_string(p) == s)
            return p;
    throw ConfigError("trace CSV: unknown provenance '" + s + "'");
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::OptimMICE ? "OptimMICE" : "UcbAlm"; }

Scheme scheme_from_string(const std::string& name)
{
    if (name == "OptimMICE")
        return Scheme::OptimMICE;
    if (name == "UcbAlm")
        return Scheme::UcbAlm;
    throw ConfigError("unknown scheme '" + name + "' (expected OptimMICE or UcbAlm)");
}

OptimizerConfig OptimizerConfig::resolved(std::size_t d) const
{
    OptimizerConfig c = *this;
    if (c.candidate_count == 0)
        c.candidate_count = 200 * d;
    if (c.initial_design_size == 0)
        c.initial_design_size = 10 * d;
    if (c.parallelism == 0)
        c.parallelism = std::max<std::size_t>(c.batch_size, 1);
    return c;
}

void OptimizerConfig::validate(std::size_t d) const
{
    OptimizerConfig c = resolved(d);
    if (c.iterations < 1)
        throw ConfigError("optimizer: iterations must be at least 1");
    if (c.batch_size < 1)
        throw ConfigError("optimizer: batch_size must be at least 1");
    if (c.initial_design_size < d + 2)
        throw ConfigError("optimizer: initial_design_size must be at least d + 2 = " + std::to_string(d + 2));
    if (c.batch_size > c.candidate_count)
        throw ConfigError("optimizer: batch_size exceeds candidate_count");
    if (!(c.beta_delta > 0.0 && c.beta_delta < 1.0))
        throw ConfigError("optimizer: beta_delta must lie in (0, 1)");
    if (c.beta_override && !(*c.beta_override >= 0.0))
        throw ConfigError("optimizer: beta_const_override must be non-negative");
    if (!(c.nugget > 0.0))
        throw ConfigError("optimizer: mice_nugget must be positive");
}

std::size_t OptimizerConfig::budget(std::size_t d) const
{
    OptimizerConfig c = resolved(d);
    return c.initial_design_size + c.iterations * c.batch_size;
}

const EvaluationRecord& OptimizationTrace::incumbent() const
{
    if (records.empty())
        throw ConfigError("trace: no evaluations");
    const EvaluationRecord* best = &records.front();
    for (const auto& r : records)
        if (r.y > best->y)
            best = &r;
    return *best;
}

OptimizationTrace run(const ParameterSpace& space, const Objective& objective, const OptimizerConfig& config)
{
    const std::size_t d = space.dim();
    config.validate(d);
    const OptimizerConfig cfg = config.resolved(d);
    const Objective target = objective.with_space(space);

    OptimizationTrace trace;
    trace.dim_names = space.names();
    if (target.known_maximum())
        trace.f_star = target.known_maximum()->value;

    RngStream root(cfg.seed, "optimice");
    Dataset data(d);
    double incumbent = -std::numeric_limits<double>::infinity();
    double cumulative = 0.0;

    auto record = [&](std::size_t t, const std::vector<Point>& unit_points, const std::vector<Provenance>& tags,
                      double beta) {
        std::vector<Point> natural;
        for (const auto& u : unit_points)
            natural.push_back(space.from_unit(u));
        std::vector<double> ys = batch_evaluate(target, natural, cfg.parallelism);
        for (std::size_t k = 0; k < ys.size(); ++k) {
            data.append(unit_points[k], ys[k]);
            incumbent = std::max(incumbent, ys[k]);
            EvaluationRecord r;
            r.iteration = t;
            r.k = k;
            r.provenance = tags[k];
            r.x = natural[k];
            r.y = ys[k];
            r.incumbent_y = incumbent;
            if (trace.f_star) {
                cumulative += *trace.f_star - ys[k];
                r.simple_regret = simple_regret(*trace.f_star, incumbent);
                r.cumulative_regret = cumulative;
            }
            r.beta = beta;
            trace.records.push_back(std::move(r));
        }
    };

    {
        RngStream design_rng = root.derive("design");
        Eigen::MatrixXd design = lhd_sample(cfg.initial_design_size, d, design_rng);
        RngStream maximin_rng = root.derive("maximin");
        design = maximin_improve(std::move(design), cfg.maximin_iterations, maximin_rng);
        std::vector<Point> pts;
        for (Eigen::Index i = 0; i < design.rows(); ++i)
            pts.push_back(design.row(i).transpose());
        record(0, pts, std::vector<Provenance>(pts.size(), Provenance::Design),
               std::numeric_limits<double>::quiet_NaN());
    }

    BatchOptions batch_opts;
    batch_opts.batch_size = cfg.batch_size;
    batch_opts.nugget = cfg.nugget;
    batch_opts.rule = cfg.scheme == Scheme::OptimMICE ? FillRule::Mice : FillRule::Alm;
    batch_opts.region_update = cfg.region_update;

    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        const std::string tag = std::to_string(t);
        RngStream fit_rng = root.derive("fit/" + tag);
        GpModel model = fit(data, cfg.fit, fit_rng);

        RngStream cand_rng = root.derive("candidates/" + tag);
        CandidateSet candidates(lhd_sample(cfg.candidate_count, d, cand_rng));
        double beta = cfg.beta_override ? *cfg.beta_override : beta_schedule(t, cfg.candidate_count, cfg.beta_delta);
        ConfidenceBounds bounds = confidence_bounds(model, beta, candidates);
        RelevantRegion region = relevant_region(bounds);
        Batch batch = select_batch(model, bounds, region, candidates, batch_opts);

        record(t, batch.points, batch.provenance, beta);

        const auto& best = trace.incumbent();
        trace.iterations.push_back({t, best.x, best.y, beta, region.members.size()});
    }
    return trace;
}

SavedEmulator final_emulator(const ParameterSpace& space, const OptimizationTrace& trace, const OptimizerConfig& config)
{
    const OptimizerConfig cfg = config.resolved(space.dim());
    Dataset data(space.dim());
    for (const auto& r : trace.records)
        data.append(space.to_unit(r.x), r.y);
    RngStream rng = RngStream(cfg.seed, "optimice").derive("fit/final");
    GpModel model = fit(data, cfg.fit, rng);
    return {space, std::move(model), trace.incumbent().x};
}

double simple_regret(double f_star, double y_best) { return f_star - y_best; }

double cumulative_regret(const OptimizationTrace& trace, double f_star)
{
    if (trace.records.empty())
        throw ConfigError("cumulative_regret: empty trace");
    double s = 0.0;
    for (const auto& r : trace.records)
        s += f_star - r.y;
    return s;
}

std::optional<std::size_t> evaluations_to_regret(const OptimizationTrace& trace, double threshold)
{
    if (!trace.f_star)
        throw ConfigError("evaluations_to_regret: trace has no known optimum");
    for (std::size_t i = 0; i < trace.records.size(); ++i)
        if (simple_regret(*trace.f_star, trace.records[i].incumbent_y) < threshold)
            return i + 1;
    return std::nullopt;
}

void write_trace_csv(std::ostream& out, const OptimizationTrace& trace)
{
    out << "iter,k,provenance";
    for (const auto& n : trace.dim_names)
        out << "," << n;
    out << ",y,incumbent_y,simple_regret,cumulative_regret,beta\n";
    for (const auto& r : trace.records) {
        out << r.iteration << "," << r.k << "," << to_string(r.provenance);
        for (Eigen::Index i = 0; i < r.x.size(); ++i)
            out << "," << format_double(r.x[i]);
        out << "," << format_double(r.y) << "," << format_double(r.incumbent_y) << ","
            << format_double(r.simple_regret) << "," << format_double(r.cumulative_regret) << ","
            << format_double(r.beta) << "\n";
    }
}

OptimizationTrace read_trace_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("trace CSV: empty input");
    auto header = split(line, ',');
    if (header.size() < 8 || header[0] != "iter" || header[1] != "k" || header[2] != "provenance")
        throw ConfigError("trace CSV: malformed header");
    const std::size_t d = header.size() - 8;
    OptimizationTrace trace;
    trace.dim_names.assign(header.begin() + 3, header.begin() + 3 + static_cast<std::ptrdiff_t>(d));
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto f = split(line, ',');
        if (f.size() != header.size())
            throw ConfigError("trace CSV: row has " + std::to_string(f.size()) + " fields, expected "
                              + std::to_string(header.size()));
        EvaluationRecord r;
        r.iteration = static_cast<std::size_t>(std::stoull(f[0]));
        r.k = static_cast<std::size_t>(std::stoull(f[1]));
        r.provenance = provenance_from_string(f[2]);
        r.x.resize(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            r.x[static_cast<Eigen::Index>(i)] = parse_double(f[3 + i]);
        r.y = parse_double(f[3 + d]);
        r.incumbent_y = parse_double(f[4 + d]);
        r.simple_regret = parse_double(f[5 + d]);
        r.cumulative_regret = parse_double(f[6 + d]);
        r.beta = parse_double(f[7 + d]);
        trace.records.push_back(std::move(r));
    }
    return trace;
}

}  // namespace optimice
