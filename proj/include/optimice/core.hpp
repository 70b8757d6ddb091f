#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace optimice {

/// A location in the input space. Whether the coordinates are natural units
/// or unit-hypercube coordinates is fixed by the function receiving it.
using Point = Eigen::VectorXd;

/// Bad input from the caller: malformed configuration, dimension mismatch,
/// out-of-range parameter.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Factorization failure or degenerate numerics that escalation could not fix.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A named, bounded input dimension.
struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
};

/// Box-shaped input domain. Immutable after construction.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<Dimension> dims);

    /// Unit hypercube [0,1]^d with names x1..xd.
    static ParameterSpace unit(std::size_t d);

    std::size_t dim() const { return dims_.size(); }
    const Dimension& operator[](std::size_t i) const { return dims_[i]; }
    const std::vector<Dimension>& dims() const { return dims_; }
    std::vector<std::string> names() const;

    bool contains(const Point& p, double tol = 1e-12) const;

    Point to_unit(const Point& p) const;
    Point from_unit(const Point& u) const;

    friend bool operator==(const ParameterSpace& a, const ParameterSpace& b);

private:
    std::vector<Dimension> dims_;
};

bool operator==(const Dimension& a, const Dimension& b);

/// Paired inputs and outputs. Inputs closer than `kDuplicateDistance` to an
/// existing row are rejected.
class Dataset {
public:
    static constexpr double kDuplicateDistance = 1e-10;

    Dataset() = default;
    explicit Dataset(std::size_t d) : d_(d) {}

    void append(const Point& x, double y);

    std::size_t size() const { return outputs_.size(); }
    bool empty() const { return outputs_.empty(); }
    std::size_t dim() const { return d_; }

    const std::vector<Point>& inputs() const { return inputs_; }
    const std::vector<double>& outputs() const { return outputs_; }

    /// Inputs stacked as rows of an n x d matrix.
    Eigen::MatrixXd input_matrix() const;
    Eigen::VectorXd output_vector() const;

    /// Index of a row within `kDuplicateDistance` of `x`, or -1.
    std::ptrdiff_t find_near(const Point& x) const;

private:
    std::size_t d_ = 0;
    std::vector<Point> inputs_;
    std::vector<double> outputs_;
};

/// Shortest decimal text that parses back to exactly `v` ("nan", "inf" for
/// non-finite values).
std::string format_double(double v);

/// Strict decimal parse: the whole of `text` (after trimming blanks) must be
/// one number. Throws ConfigError otherwise.
double parse_double(std::string_view text);

/// splitmix64 finalizer. Used to mix seeds and stream labels.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a hash of a label, stable across platforms.
std::uint64_t fnv1a64(std::string_view s);

/// Deterministic random stream keyed by (seed, id). Draws are built from raw
/// mt19937_64 output so sequences match on every conforming platform;
/// std distributions are avoided because their algorithms are unspecified.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string id);

    std::uint64_t seed() const { return seed_; }
    const std::string& id() const { return id_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::span<T> values)
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// Independent child stream with id "<id>/<suffix>" and the same seed.
    RngStream derive(const std::string& suffix) const;

private:
    std::uint64_t seed_;
    std::string id_;
    std::mt19937_64 engine_;
};

}  // namespace optimice
