#include "optimice/core.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

namespace optimice {

ParameterSpace::ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims))
{
    std::unordered_set<std::string> seen;
    for (const auto& d : dims_) {
        if (d.name.empty())
            throw ConfigError("parameter space: dimension name must be non-empty");
        if (!seen.insert(d.name).second)
            throw ConfigError("parameter space: duplicate dimension name '" + d.name + "'");
        if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper))
            throw ConfigError("parameter space: dimension '" + d.name + "' needs finite lower < upper");
    }
}

ParameterSpace ParameterSpace::unit(std::size_t d)
{
    std::vector<Dimension> dims;
    for (std::size_t i = 0; i < d; ++i)
        dims.push_back({"x" + std::to_string(i + 1), 0.0, 1.0});
    return ParameterSpace(std::move(dims));
}

std::vector<std::string> ParameterSpace::names() const
{
    std::vector<std::string> out;
    for (const auto& d : dims_)
        out.push_back(d.name);
    return out;
}

bool ParameterSpace::contains(const Point& p, double tol) const
{
    if (static_cast<std::size_t>(p.size()) != dim())
        return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        double slack = tol * (dims_[i].upper - dims_[i].lower);
        if (!(p[i] >= dims_[i].lower - slack && p[i] <= dims_[i].upper + slack))
            return false;
    }
    return true;
}

Point ParameterSpace::to_unit(const Point& p) const
{
    if (static_cast<std::size_t>(p.size()) != dim())
        throw ConfigError("to_unit: point has " + std::to_string(p.size()) + " coordinates, space has "
                          + std::to_string(dim()));
    if (!contains(p))
        throw ConfigError("to_unit: point outside parameter space bounds");
    Point u(p.size());
    for (std::size_t i = 0; i < dim(); ++i)
        u[i] = (p[i] - dims_[i].lower) / (dims_[i].upper - dims_[i].lower);
    return u;
}

Point ParameterSpace::from_unit(const Point& u) const
{
    if (static_cast<std::size_t>(u.size()) != dim())
        throw ConfigError("from_unit: point has " + std::to_string(u.size()) + " coordinates, space has "
                          + std::to_string(dim()));
    Point p(u.size());
    for (std::size_t i = 0; i < dim(); ++i)
        p[i] = dims_[i].lower + u[i] * (dims_[i].upper - dims_[i].lower);
    return p;
}

bool operator==(const Dimension& a, const Dimension& b)
{
    return a.name == b.name && a.lower == b.lower && a.upper == b.upper;
}

bool operator==(const ParameterSpace& a, const ParameterSpace& b) { return a.dims_ == b.dims_; }

void Dataset::append(const Point& x, double y)
{
    if (d_ == 0 && inputs_.empty())
        d_ = static_cast<std::size_t>(x.size());
    if (static_cast<std::size_t>(x.size()) != d_)
        throw ConfigError("dataset: input dimension mismatch");
    if (!std::isfinite(y) || !x.allFinite())
        throw ConfigError("dataset: non-finite row");
    if (find_near(x) >= 0)
        throw ConfigError("dataset: duplicate input rejected");
    inputs_.push_back(x);
    outputs_.push_back(y);
}

std::ptrdiff_t Dataset::find_near(const Point& x) const
{
    for (std::size_t i = 0; i < inputs_.size(); ++i)
        if ((inputs_[i] - x).norm() < kDuplicateDistance)
            return static_cast<std::ptrdiff_t>(i);
    return -1;
}

Eigen::MatrixXd Dataset::input_matrix() const
{
    Eigen::MatrixXd m(inputs_.size(), d_);
    for (std::size_t i = 0; i < inputs_.size(); ++i)
        m.row(i) = inputs_[i].transpose();
    return m;
}

Eigen::VectorXd Dataset::output_vector() const
{
    return Eigen::Map<const Eigen::VectorXd>(outputs_.data(), static_cast<Eigen::Index>(outputs_.size()));
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
    auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!text.empty() && blank(text.front()))
        text.remove_prefix(1);
    while (!text.empty() && blank(text.back()))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("not a number: '" + std::string(text) + "'");
    return v;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t seed, std::string id)
    : seed_(seed), id_(std::move(id)), engine_(splitmix64(seed ^ fnv1a64(id_)))
{
}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t RngStream::below(std::uint64_t n)
{
    if (n == 0)
        throw ConfigError("RngStream::below: empty range");
    // rejection sampling keeps the draw unbiased
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

RngStream RngStream::derive(const std::string& suffix) const { return RngStream(seed_, id_ + "/" + suffix); }

}  // namespace optimice
