#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "optimice/cli.hpp"

namespace optimice {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(value);
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value)
{
    std::uint64_t v = 0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end || value.empty())
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + value + "'");
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& value)
{
    return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(const std::string& key, const std::string& value)
{
    try {
        return parse_double(value);
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<double> parse_reals(const std::string& key, const std::string& value)
{
    std::vector<double> out;
    for (const auto& item : split_list(value))
        out.push_back(parse_real(key, item));
    return out;
}

// First word of a shell command, when it names a file we can check.
void check_command_exists(const std::string& command)
{
    std::istringstream ss(command);
    std::string program;
    ss >> program;
    if (program.empty())
        throw ConfigError("config key 'external.command' is empty");
    namespace fs = std::filesystem;
    if (program.find('/') != std::string::npos) {
        if (!fs::exists(program))
            throw ConfigError("external command '" + program + "' does not exist");
        return;
    }
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "");
    std::string dir;
    while (std::getline(dirs, dir, ':'))
        if (!dir.empty() && fs::exists(fs::path(dir) / program))
            return;
    // shell builtins such as echo or printf are still runnable
    static const std::vector<std::string> builtins{"echo", "printf", "exit", "read", "sleep", "true", "false"};
    if (std::find(builtins.begin(), builtins.end(), program) == builtins.end())
        throw ConfigError("external command '" + program + "' not found on PATH");
}

}  // namespace

std::vector<std::string> config_keys()
{
    return {"objective",          "external.command",  "external.timeout",  "objective.negate",
            "objective.known_max", "space.<name>.lower", "space.<name>.upper", "scheme",
            "schemes",            "iterations",        "batch_size",        "candidate_count",
            "initial_design_size", "maximin_iterations", "parallelism",       "seed",
            "trials",             "output_dir",        "kernel",            "kernel.nu",
            "kernel.p",           "kernel.length_scales", "jitter",         "beta_delta",
            "beta_const_override", "mice_nugget",       "region_update",     "morris.r",
            "morris.r_values",    "morris.levels",     "morris.pool",       "sweep.n_per_dim",
            "sweep.center"};
}

RunConfig parse_config(std::istream& in, const std::string& source)
{
    RunConfig c;
    std::map<std::string, std::string> seen;
    std::vector<std::string> space_order;
    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> bounds;
    std::optional<double> nu, p;
    std::optional<std::string> kernel;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#')
            continue;
        const auto eq = body.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty())
            throw ConfigError(where + ": empty key");
        if (!seen.emplace(key, value).second)
            throw ConfigError(where + ": key '" + key + "' given twice");

        if (key.rfind("space.", 0) == 0) {
            const auto dot = key.rfind('.');
            const std::string name = key.substr(6, dot - 6);
            const std::string field = key.substr(dot + 1);
            if (dot <= 6 || name.empty() || (field != "lower" && field != "upper"))
                throw ConfigError(where + ": unknown key '" + key + "' (expected space.<name>.lower or .upper)");
            if (!bounds.contains(name))
                space_order.push_back(name);
            (field == "lower" ? bounds[name].first : bounds[name].second) = parse_real(key, value);
            continue;
        }

        auto& o = c.optimizer;
        if (key == "objective")
            c.objective = value;
        else if (key == "external.command") {
            c.external = c.external.value_or(ExternalCommand{});
            c.external->command = value;
        } else if (key == "external.timeout") {
            double seconds = parse_real(key, value);
            if (!(seconds > 0.0))
                throw ConfigError(where + ": external.timeout must be positive seconds");
            c.external = c.external.value_or(ExternalCommand{});
            c.external->timeout = std::chrono::milliseconds(static_cast<long long>(std::llround(seconds * 1000.0)));
        } else if (key == "objective.negate")
            c.negate = parse_bool(key, value);
        else if (key == "objective.known_max")
            c.known_max = parse_real(key, value);
        else if (key == "scheme")
            o.scheme = scheme_from_string(value);
        else if (key == "schemes") {
            c.schemes.clear();
            for (const auto& s : split_list(value))
                c.schemes.push_back(scheme_from_string(s));
        } else if (key == "iterations")
            o.iterations = parse_count(key, value);
        else if (key == "batch_size")
            o.batch_size = parse_count(key, value);
        else if (key == "candidate_count")
            o.candidate_count = parse_count(key, value);
        else if (key == "initial_design_size")
            o.initial_design_size = parse_count(key, value);
        else if (key == "maximin_iterations")
            o.maximin_iterations = parse_count(key, value);
        else if (key == "parallelism")
            o.parallelism = parse_count(key, value);
        else if (key == "seed")
            o.seed = parse_u64(key, value);
        else if (key == "trials")
            c.trials = parse_count(key, value);
        else if (key == "output_dir")
            c.output_dir = value;
        else if (key == "kernel")
            kernel = value;
        else if (key == "kernel.nu")
            nu = parse_real(key, value);
        else if (key == "kernel.p")
            p = parse_real(key, value);
        else if (key == "kernel.length_scales") {
            auto ls = parse_reals(key, value);
            o.fit.fixed_length_scales = Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
        } else if (key == "jitter")
            o.fit.jitter = parse_real(key, value);
        else if (key == "beta_delta")
            o.beta_delta = parse_real(key, value);
        else if (key == "beta_const_override")
            o.beta_override = parse_real(key, value);
        else if (key == "mice_nugget")
            o.nugget = parse_real(key, value);
        else if (key == "region_update")
            o.region_update = parse_bool(key, value);
        else if (key == "morris.r")
            c.morris.r = parse_count(key, value);
        else if (key == "morris.r_values") {
            for (const auto& item : split_list(value))
                c.r_values.push_back(parse_count(key, item));
        } else if (key == "morris.levels")
            c.morris.levels = parse_count(key, value);
        else if (key == "morris.pool")
            c.morris.pool = parse_count(key, value);
        else if (key == "sweep.n_per_dim")
            c.sweep_n = parse_count(key, value);
        else if (key == "sweep.center")
            c.sweep_center = parse_reals(key, value);
        else
            throw ConfigError(where + ": unknown key '" + key + "'");
    }

    for (const auto& name : space_order) {
        const auto& [lo, hi] = bounds[name];
        if (!lo || !hi)
            throw ConfigError(source + ": space dimension '" + name + "' needs both lower and upper");
        c.space.push_back({name, *lo, *hi});
    }

    if (kernel)
        c.optimizer.fit.family = kernel_family_from_string(*kernel);
    auto& fit = c.optimizer.fit;
    if (fit.family == KernelFamily::Matern) {
        if (p)
            throw ConfigError(source + ": kernel.p applies to the powexp kernel only");
        fit.smoothness = nu.value_or(2.5);
    } else {
        if (nu)
            throw ConfigError(source + ": kernel.nu applies to the matern kernel only");
        fit.smoothness = p.value_or(2.0);
    }
    KernelConfig probe{fit.family, Eigen::VectorXd::Ones(1), fit.smoothness};
    probe.validate();
    if (!(fit.jitter > 0.0) || fit.jitter > fit.max_jitter)
        throw ConfigError(source + ": jitter must lie in (0, " + format_double(fit.max_jitter) + "]");

    if (c.objective == "external") {
        if (!c.external || c.external->command.empty())
            throw ConfigError(source + ": objective 'external' needs external.command");
        if (c.space.empty())
            throw ConfigError(source + ": objective 'external' needs a space definition");
        check_command_exists(c.external->command);
    } else {
        const auto names = builtin_names();
        if (std::find(names.begin(), names.end(), c.objective) == names.end())
            throw ConfigError(source + ": unknown objective '" + c.objective + "'");
        if (c.external || c.negate || c.known_max)
            throw ConfigError(source + ": external.* and objective.negate/known_max need objective = external");
    }
    if (!c.r_values.empty() && seen.contains("morris.r"))
        throw ConfigError(source + ": give morris.r or morris.r_values, not both");
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config '" + path.string() + "'");
    return parse_config(in, path.string());
}

ParameterSpace RunConfig::make_space() const
{
    if (!space.empty())
        return ParameterSpace(space);
    if (objective == "external")
        throw ConfigError("external objective without a space");
    return Objective::builtin(objective).space();
}

Objective RunConfig::make_objective() const
{
    ParameterSpace box = make_space();
    if (objective == "external")
        return Objective::external(*external, box, negate, known_max);
    std::size_t d = objective == "rosenbrock" ? box.dim() : 0;
    return Objective::builtin(objective, d).with_space(box);
}

}  // namespace optimice
