#include "optimice/testbed.hpp"

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstring>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace optimice {

namespace {

std::atomic<std::uint64_t> g_evaluations{0};

std::string describe(const Point& x)
{
    std::string s = "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i)
            s += ", ";
        s += format_double(x[i]);
    }
    return s + ")";
}

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    ~Fd() { reset(); }
    int get() const { return fd_; }
    void reset()
    {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe()
{
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0)
        throw std::runtime_error(std::string("pipe2 failed: ") + std::strerror(errno));
    return {Fd(fds[0]), Fd(fds[1])};
}

// Kills the child's process group and reaps it unless released.
class ChildGuard {
public:
    explicit ChildGuard(pid_t pid) : pid_(pid) {}
    ChildGuard(const ChildGuard&) = delete;
    ChildGuard& operator=(const ChildGuard&) = delete;
    ~ChildGuard()
    {
        if (pid_ > 0) {
            ::kill(-pid_, SIGKILL);
            int status = 0;
            while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
            }
        }
    }
    int wait()
    {
        int status = 0;
        while (::waitpid(pid_, &status, 0) < 0) {
            if (errno != EINTR)
                throw std::runtime_error("waitpid failed");
        }
        // reap stragglers sharing the group (background jobs of the command)
        ::kill(-pid_, SIGKILL);
        pid_ = -1;
        return status;
    }

private:
    pid_t pid_;
};

void ignore_sigpipe()
{
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

KnownMaximum validated(const Objective::Function& f, bool negate, KnownMaximum km, const std::string& name)
{
    for (const auto& x : km.argmax) {
        double v = f(x);
        if (negate)
            v = -v;
        if (std::abs(v - km.value) > 1e-6)
            throw ConfigError("objective '" + name + "': known maximum " + format_double(km.value)
                              + " does not match value " + format_double(v) + " at " + describe(x));
    }
    return km;
}

}  // namespace

EvaluationError::EvaluationError(const std::string& what, Point point, std::string raw_output)
    : std::runtime_error(what + " at " + describe(point)), point_(std::move(point)), raw_(std::move(raw_output))
{
}

double branin(const Point& x)
{
    constexpr double pi = std::numbers::pi;
    const double b = 5.1 / (4.0 * pi * pi);
    const double c = 5.0 / pi;
    const double t = 1.0 / (8.0 * pi);
    double u = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
    return u * u + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double rosenbrock(const Point& x)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        double a = x[i + 1] - x[i] * x[i];
        double b = 1.0 - x[i];
        s += 100.0 * a * a + b * b;
    }
    return s;
}

double eval_external(const ExternalCommand& cmd, const Point& x)
{
    ignore_sigpipe();
    auto [in_read, in_write] = make_pipe();
    auto [out_read, out_write] = make_pipe();

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_read.get(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_write.get(), STDOUT_FILENO);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    std::string shell = "/bin/sh", flag = "-c", body = cmd.command;
    char* argv[] = {shell.data(), flag.data(), body.data(), nullptr};
    pid_t pid = -1;
    int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0)
        throw EvaluationError(std::string("could not start evaluator: ") + std::strerror(rc), x);
    ChildGuard child(pid);
    in_read.reset();
    out_write.reset();

    std::string line;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i)
            line += ' ';
        line += format_double(x[i]);
    }
    line += '\n';
    // a child that ignores stdin may close it early; that is not an error
    [[maybe_unused]] auto written = ::write(in_write.get(), line.data(), line.size());
    in_write.reset();

    std::string output;
    const auto deadline = std::chrono::steady_clock::now() + cmd.timeout;
    char buf[4096];
    while (true) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            throw EvaluationError("evaluator timed out after " + std::to_string(cmd.timeout.count()) + " ms", x,
                                  output);
        pollfd pfd{out_read.get(), POLLIN, 0};
        int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1'000'000)));
        if (pr < 0) {
            if (errno == EINTR)
                continue;
            throw EvaluationError("poll failed", x, output);
        }
        if (pr == 0)
            continue;
        ssize_t n = ::read(out_read.get(), buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw EvaluationError("read failed", x, output);
        }
        if (n == 0)
            break;
        output.append(buf, static_cast<std::size_t>(n));
    }

    int status = child.wait();
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw EvaluationError("evaluator exited with status "
                                  + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1),
                              x, output);

    std::istringstream ss(output);
    std::string token, extra;
    if (!(ss >> token) || (ss >> extra))
        throw EvaluationError("evaluator must print exactly one number", x, output);
    double v;
    try {
        v = parse_double(token);
    } catch (const ConfigError&) {
        throw EvaluationError("evaluator output is not a number", x, output);
    }
    if (!std::isfinite(v))
        throw EvaluationError("evaluator returned a non-finite value", x, output);
    return v;
}

Objective Objective::builtin(const std::string& name, std::size_t dim)
{
    constexpr double pi = std::numbers::pi;
    if (name == "branin") {
        if (dim != 0 && dim != 2)
            throw ConfigError("builtin 'branin' is two-dimensional");
        ParameterSpace space({{"x1", -5.0, 10.0}, {"x2", 0.0, 15.0}});
        Point a(2), b(2), c(2);
        a << -pi, 12.275;
        b << pi, 2.275;
        c << 3.0 * pi, 2.475;
        return from_function(name, branin, space, KnownMaximum{-5.0 / (4.0 * pi), {a, b, c}}, true);
    }
    if (name == "rosenbrock") {
        std::size_t d = dim == 0 ? 3 : dim;
        if (d < 2)
            throw ConfigError("builtin 'rosenbrock' needs at least two dimensions");
        std::vector<Dimension> dims;
        for (std::size_t i = 0; i < d; ++i)
            dims.push_back({"x" + std::to_string(i + 1), -5.0, 10.0});
        return from_function(name, rosenbrock, ParameterSpace(std::move(dims)),
                             KnownMaximum{0.0, {Point::Ones(static_cast<Eigen::Index>(d))}}, true);
    }
    if (name == "linear") {
        if (dim != 0 && dim != 2)
            throw ConfigError("builtin 'linear' is two-dimensional");
        Point arg(2);
        arg << 1.0, 0.0;
        return from_function(
            name, [](const Point& x) { return 2.0 * x[0] - 3.0 * x[1]; }, ParameterSpace::unit(2),
            KnownMaximum{2.0, {arg}}, false);
    }
    throw ConfigError("unknown builtin objective '" + name + "'");
}

Objective Objective::external(ExternalCommand cmd, ParameterSpace space, bool negate, std::optional<double> known_max)
{
    Objective o;
    o.name_ = "external";
    o.space_ = std::move(space);
    o.negate_ = negate;
    if (known_max)
        o.known_max_ = KnownMaximum{*known_max, {}};
    o.f_ = [cmd](const Point& x) { return eval_external(cmd, x); };
    o.external_ = std::move(cmd);
    return o;
}

Objective Objective::from_function(std::string name, Function f, ParameterSpace space,
                                   std::optional<KnownMaximum> known_max, bool negate)
{
    Objective o;
    o.name_ = std::move(name);
    if (known_max)
        o.known_max_ = validated(f, negate, std::move(*known_max), o.name_);
    o.f_ = std::move(f);
    o.space_ = std::move(space);
    o.negate_ = negate;
    return o;
}

Objective Objective::with_space(ParameterSpace space) const
{
    if (space.dim() != space_.dim())
        throw ConfigError("objective '" + name_ + "': space has " + std::to_string(space.dim())
                          + " dimensions, objective expects " + std::to_string(space_.dim()));
    Objective o = *this;
    o.space_ = std::move(space);
    return o;
}

double Objective::operator()(const Point& x) const
{
    if (static_cast<std::size_t>(x.size()) != space_.dim())
        throw ConfigError("objective '" + name_ + "': point dimension mismatch");
    g_evaluations.fetch_add(1, std::memory_order_relaxed);
    double v = f_(x);
    if (!std::isfinite(v))
        throw EvaluationError("objective '" + name_ + "' returned a non-finite value", x);
    return negate_ ? -v : v;
}

std::vector<std::string> builtin_names() { return {"branin", "rosenbrock", "linear"}; }

double eval_builtin(const std::string& name, const Point& x)
{
    return Objective::builtin(name, name == "rosenbrock" ? static_cast<std::size_t>(x.size()) : 0)(x);
}

std::vector<double> batch_evaluate(const Objective& objective, const std::vector<Point>& points,
                                   std::size_t parallelism)
{
    if (parallelism < 1)
        throw ConfigError("batch_evaluate: parallelism must be at least 1");
    std::vector<double> results(points.size());
    const std::size_t workers = std::min(parallelism, points.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i)
            results[i] = objective(points[i]);
        return results;
    }

    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto work = [&] {
        while (!failed.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= points.size())
                return;
            try {
                results[i] = objective(points[i]);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

std::uint64_t evaluation_count() { return g_evaluations.load(std::memory_order_relaxed); }

}  // namespace optimice
