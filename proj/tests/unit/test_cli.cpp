#include "doctest.h"

#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "optimice/analysis.hpp"
#include "optimice/cli.hpp"
#include "optimice/svg.hpp"

using namespace optimice;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    static std::atomic<int> counter{0};
    fs::path p = fs::temp_directory_path()
                 / ("optimice_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in, "test");
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

int run_tool(const std::string& args, const fs::path& err)
{
    std::string cmd = std::string(OPTIMICE_TOOL) + " " + args + " > /dev/null 2> '" + err.string() + "'";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<double> numbers(const std::string& attr)
{
    std::vector<double> out;
    std::istringstream in(attr);
    std::string tok;
    while (in >> tok)
        out.push_back(parse_double(tok));
    return out;
}

const char* kBraninBudget100 = "objective = branin\n"
                               "iterations = 22\n"
                               "batch_size = 4\n"
                               "initial_design_size = 12\n"
                               "seed = 17\n";

}  // namespace

TEST_CASE("config parsing details")
{
    RunConfig c = parse("# comment\n"
                        "objective = branin\n"
                        "  scheme = UcbAlm\n"
                        "iterations = 5\n"
                        "batch_size = 3\n"
                        "kernel = powexp\n"
                        "kernel.p = 1.5\n"
                        "kernel.length_scales = 0.2, 0.3\n"
                        "seed = 99\n"
                        "schemes = UcbAlm\n");
    CHECK(c.optimizer.scheme == Scheme::UcbAlm);
    CHECK(c.optimizer.iterations == 5);
    CHECK(c.optimizer.batch_size == 3);
    CHECK(c.optimizer.fit.family == KernelFamily::PowerExponential);
    CHECK(c.optimizer.fit.smoothness == 1.5);
    CHECK(c.optimizer.fit.fixed_length_scales->size() == 2);
    CHECK(c.optimizer.seed == 99);
    CHECK(c.schemes == std::vector<Scheme>{Scheme::UcbAlm});

    RunConfig s = parse("objective = external\n"
                        "external.command = " OPTIMICE_STUBS "/constant_one.sh\n"
                        "external.timeout = 2.5\n"
                        "space.z.lower = 0\n"
                        "space.z.upper = 5\n"
                        "space.a.lower = -1\n"
                        "space.a.upper = 1\n");
    REQUIRE(s.space.size() == 2);
    CHECK(s.space[0].name == "z");
    CHECK(s.space[1].name == "a");
    CHECK(s.external->timeout == std::chrono::milliseconds(2500));
    CHECK(s.make_objective()(Point::Zero(2)) == 1.0);
}

TEST_CASE("config errors")
{
    auto bad = [](const std::string& text, const std::string& needle) {
        try {
            parse(text);
            FAIL("accepted: " << text);
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    bad("bati_size = 4\n", "bati_size");
    bad("iterations = 4\niterations = 5\n", "twice");
    bad("iterations = -1\n", "iterations");
    bad("iterations 4\n", "key = value");
    bad("objective = nope\n", "nope");
    bad("kernel = matern\nkernel.nu = 1.0\n", "");
    bad("kernel.p = 1.5\n", "kernel.p");
    bad("objective = external\n", "external.command");
    bad("objective = external\nexternal.command = /definitely/missing\nspace.x.lower = 0\nspace.x.upper = 1\n",
        "missing");
    bad("objective = external\nexternal.command = echo 1\n", "space");
    bad("space.x.lower = 0\n", "upper");
    bad("objective.negate = true\n", "external");
    bad("morris.r = 4\nmorris.r_values = 2, 4\n", "morris.r");
    bad("scheme = Fancy\n", "Fancy");
}

TEST_CASE("exit code partition")
{
    std::ostringstream err;
    CHECK(guarded([] {}, err) == kExitOk);
    CHECK(guarded([] { throw ConfigError("c"); }, err) == kExitConfig);
    CHECK(guarded([] { throw EvaluationError("e", Point::Zero(1), "raw"); }, err) == kExitEvaluation);
    CHECK(guarded([] { throw NumericalError("n"); }, err) == kExitNumerical);
    CHECK(err.str().find("raw") != std::string::npos);
}

TEST_CASE("tool reports unknown keys with exit code 1")
{
    fs::path dir = scratch("unknown");
    {
        std::ofstream(dir / "bad.cfg") << "objective = branin\nbati_size = 4\n";
    }
    CHECK(run_tool("optimize --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string(),
                   dir / "err.txt")
          == 1);
    CHECK(slurp(dir / "err.txt").find("bati_size") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o" / "trace.csv"));

    CHECK(run_tool("optimize", dir / "err2.txt") == 1);
    CHECK(run_tool("frobnicate", dir / "err3.txt") == 1);

    {
        std::ofstream(dir / "fail.cfg") << "objective = external\nexternal.command = " OPTIMICE_STUBS
                                           "/fail.sh\nspace.x.lower = 0\nspace.x.upper = 1\n"
                                           "iterations = 1\nbatch_size = 1\ninitial_design_size = 3\n";
    }
    CHECK(run_tool("optimize --config " + (dir / "fail.cfg").string() + " --out " + (dir / "f").string(),
                   dir / "err4.txt")
          == 2);
    fs::remove_all(dir);
}

TEST_CASE("optimize writes a budget-sized reproducible trace")
{
    fs::path dir = scratch("optimize");
    RunConfig c = parse(kBraninBudget100);
    std::ostringstream log;
    cmd_optimize(c, dir / "a", log);
    cmd_optimize(c, dir / "b", log);
    for (const char* f : {"trace.csv", "summary.txt", "regret.svg", "model.txt"}) {
        REQUIRE(fs::exists(dir / "a" / f));
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    std::string trace = slurp(dir / "a" / "trace.csv");
    CHECK(lines(trace) == 101);

    std::string summary = slurp(dir / "a" / "summary.txt");
    CHECK(summary.find("incumbent.x1 = ") != std::string::npos);
    CHECK(summary.find("simple_regret = ") != std::string::npos);

    // svg data equals the trace regret column
    std::istringstream in(trace);
    OptimizationTrace t = read_trace_csv(in);
    std::string svg = slurp(dir / "a" / "regret.svg");
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex("data-y=\"([^\"]*)\"")));
    std::vector<double> ys = numbers(m[1]);
    REQUIRE(ys.size() == t.records.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
        CHECK(ys[i] == t.records[i].simple_regret);

    std::ifstream model(dir / "a" / "model.txt");
    SavedEmulator e = load_emulator(model);
    CHECK(e.model.train().size() == 100);
    CHECK(*e.incumbent == t.incumbent().x);
    fs::remove_all(dir);
}

TEST_CASE("benchmark output layout")
{
    fs::path dir = scratch("bench");
    RunConfig c = parse("objective = branin\n"
                        "iterations = 2\n"
                        "batch_size = 2\n"
                        "initial_design_size = 6\n"
                        "candidate_count = 100\n"
                        "trials = 2\n"
                        "seed = 3\n");
    std::ostringstream log;
    cmd_benchmark(c, dir, log);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 7);
    for (const char* f : {"OptimMICE_trial01.csv", "OptimMICE_trial02.csv", "UcbAlm_trial01.csv",
                          "UcbAlm_trial02.csv", "mean_regret.csv", "boxplot.csv", "benchmark.svg"})
        CHECK_MESSAGE(fs::exists(dir / f), f);
    CHECK(lines(slurp(dir / "mean_regret.csv")) == 1 + 2 * 10);
    CHECK(lines(slurp(dir / "boxplot.csv")) == 3);
    CHECK(log.str().find("median evaluations to regret < 1") != std::string::npos);

    // trial t of each scheme shares the seed: identical designs
    std::istringstream a(slurp(dir / "OptimMICE_trial01.csv")), b(slurp(dir / "UcbAlm_trial01.csv"));
    auto ta = read_trace_csv(a), tb = read_trace_csv(b);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(ta.records[i].x == tb.records[i].x);

    c.trials = 1;
    CHECK_THROWS_AS(cmd_benchmark(c, dir / "x", log), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("trial seeds")
{
    CHECK(trial_seed(0, 0) == splitmix64(0x9E3779B97F4A7C15ULL));
    CHECK(trial_seed(5, 2) == splitmix64(5 + 3 * 0x9E3779B97F4A7C15ULL));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
}

TEST_CASE("screen command")
{
    fs::path dir = scratch("screen");
    std::ostringstream log;
    cmd_screen(parse("objective = linear\nmorris.r = 4\n"), dir / "s", log);
    std::string csv = slurp(dir / "s" / "screening.csv");
    CHECK(lines(csv) == 3);
    std::istringstream rows(csv);
    std::string row;
    std::getline(rows, row);
    for (const auto& [name, mu] : {std::pair{"x1", 2.0}, std::pair{"x2", -3.0}}) {
        REQUIRE(std::getline(rows, row));
        std::vector<std::string> f;
        std::istringstream fields(row);
        for (std::string item; std::getline(fields, item, ',');)
            f.push_back(item);
        REQUIRE(f.size() == 7);
        CHECK(f[0] == name);
        CHECK(std::abs(parse_double(f[1]) - mu) < 1e-12);
        CHECK(std::abs(parse_double(f[2]) - std::abs(mu)) < 1e-12);
        CHECK(parse_double(f[3]) <= 1e-12);
        CHECK(f[5] == "linear");
        CHECK(f[6] == "4");
    }
    CHECK(fs::exists(dir / "s" / "screening.svg"));
    CHECK(log.str().find("evaluations: 12 (counter 12)") != std::string::npos);

    std::ostringstream log2;
    cmd_screen(parse("objective = linear\nmorris.r_values = 2, 4, 8\n"), dir / "r", log2);
    std::string rob = slurp(dir / "r" / "robustness.csv");
    CHECK(lines(rob) == 1 + 3 * 2);
    for (const char* r : {"\n2,", "\n4,", "\n8,"})
        CHECK(rob.find(r) != std::string::npos);
    CHECK(log2.str().find("evaluations: 42") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("sweep command")
{
    fs::path dir = scratch("sweep");
    ParameterSpace space({{"rate", 1.0, 3.0}});
    Dataset data(1);
    for (double u : {0.0, 0.3, 0.7, 1.0})
        data.append(Point::Constant(1, u), std::cos(4.0 * u));
    SavedEmulator saved{space,
                        GpModel::condition(data, KernelConfig{KernelFamily::Matern, Eigen::VectorXd::Constant(1, 0.3), 2.5},
                                           1e-8, 1e-4),
                        Point::Constant(1, 2.0)};
    {
        std::ofstream out(dir / "model.txt");
        save_emulator(out, saved);
    }
    std::ostringstream log;
    RunConfig c;
    cmd_sweep(dir / "model.txt", c, dir / "a", log);
    cmd_sweep(dir / "model.txt", c, dir / "b", log);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        (void)entry;
        ++files;
    }
    CHECK(files == 2);
    CHECK(slurp(dir / "a" / "sweep_rate.csv") == slurp(dir / "b" / "sweep_rate.csv"));
    CHECK(slurp(dir / "a" / "sweep_rate.svg") == slurp(dir / "b" / "sweep_rate.svg"));
    CHECK(log.str().find("predictions: 125, evaluations: 0") != std::string::npos);

    // svg series carries the csv numbers at full precision
    std::string svg = slurp(dir / "a" / "sweep_rate.svg");
    std::smatch mx, my, me;
    REQUIRE(std::regex_search(svg, mx, std::regex("data-x=\"([^\"]*)\"")));
    REQUIRE(std::regex_search(svg, my, std::regex("data-y=\"([^\"]*)\"")));
    REQUIRE(std::regex_search(svg, me, std::regex("data-err=\"([^\"]*)\"")));
    auto xs = numbers(mx[1]), ys = numbers(my[1]), es = numbers(me[1]);
    std::istringstream csv(slurp(dir / "a" / "sweep_rate.csv"));
    std::string row;
    std::getline(csv, row);
    std::size_t i = 0;
    while (std::getline(csv, row)) {
        std::istringstream fields(row);
        std::string name, x, mean, sd;
        std::getline(fields, name, ',');
        std::getline(fields, x, ',');
        std::getline(fields, mean, ',');
        std::getline(fields, sd, ',');
        REQUIRE(i < xs.size());
        CHECK(xs[i] == parse_double(x));
        CHECK(ys[i] == parse_double(mean));
        CHECK(es[i] == 2.0 * parse_double(sd));
        ++i;
    }
    CHECK(i == 125);

    RunConfig off;
    off.sweep_center = std::vector<double>{2.0, 1.0};
    CHECK_THROWS_AS(cmd_sweep(dir / "model.txt", off, dir / "c", log), ConfigError);
    CHECK_THROWS_AS(cmd_sweep(dir / "missing.txt", c, dir / "c", log), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("svg is well formed")
{
    Series s{"a<b", {1.0, 2.0, 3.0}, {0.1, 1e-5, 1.0 / 3.0}, {}, Series::Style::Line};
    std::string svg = render_svg({"t & u", "x", "y", true}, {s});
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(svg.find("t &amp; u") != std::string::npos);
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex("data-y=\"([^\"]*)\"")));
    CHECK(numbers(m[1]) == s.y);
    // every opened element is closed
    std::regex open("<([a-z]+)[ >]"), close("</([a-z]+)>"), self("<[a-z]+[^>]*/>");
    auto count = [&](const std::regex& r) {
        return std::distance(std::sregex_iterator(svg.begin(), svg.end(), r), std::sregex_iterator());
    };
    CHECK(count(open) == count(close) + count(self));
}

TEST_CASE("box stats and atomic writes")
{
    BoxStats b = box_stats({4.0, 1.0, 3.0, 2.0, 5.0});
    CHECK(b.min == 1.0);
    CHECK(b.q1 == 2.0);
    CHECK(b.median == 3.0);
    CHECK(b.q3 == 4.0);
    CHECK(b.max == 5.0);
    CHECK(b.mean == 3.0);
    BoxStats e = box_stats({1.0, 2.0});
    CHECK(e.q1 == 1.25);
    CHECK(e.median == 1.5);

    fs::path dir = scratch("atomic");
    write_file_atomic(dir / "f.txt", "one");
    write_file_atomic(dir / "f.txt", "two");
    CHECK(slurp(dir / "f.txt") == "two");
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 1);
    fs::remove_all(dir);
}
