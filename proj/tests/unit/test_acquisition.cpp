#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "optimice/acquisition.hpp"
#include "oracles.hpp"

using namespace optimice;

namespace {

Dataset make_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
    Dataset d(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        d.append(x.row(i).transpose(), y[i]);
    return d;
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

GpModel random_model(RngStream& rng, std::size_t n, std::size_t d)
{
    Eigen::MatrixXd x = lhd_sample(n, d, rng);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] = std::sin(7.0 * x(i, 0)) + rng.uniform();
    Eigen::VectorXd ls = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), 0.15 + 0.3 * rng.uniform());
    return GpModel::condition(make_data(x, y), KernelConfig::matern(2.5, ls), 1e-8, 1e-4);
}

}  // namespace

TEST_CASE("beta schedule")
{
    CHECK(std::abs(beta_schedule(1, 100, 0.1) - 2.0 * std::log(100.0 * std::numbers::pi * std::numbers::pi / 0.6))
          < 1e-12);
    for (std::size_t count : {1, 10, 400})
        for (double delta : {0.01, 0.1, 0.9})
            CHECK(beta_schedule(2, count, delta) > beta_schedule(1, count, delta));
    CHECK_THROWS_AS(beta_schedule(0, 10, 0.1), ConfigError);
    CHECK_THROWS_AS(beta_schedule(1, 10, 1.0), ConfigError);
    CHECK_THROWS_AS(beta_schedule(1, 10, 0.0), ConfigError);
}

TEST_CASE("confidence bound arithmetic")
{
    ConfidenceBounds b = make_bounds(vec({1.0}), vec({0.5}), 4.0);
    CHECK(b.upper[0] == 2.0);
    CHECK(b.lower[0] == 0.0);
    ConfidenceBounds z = make_bounds(vec({1.0, -2.0}), vec({0.5, 3.0}), 0.0);
    CHECK(z.upper == z.mean);
    CHECK(z.lower == z.mean);
    CHECK_THROWS_AS(make_bounds(vec({1.0}), vec({1.0}), -1.0), ConfigError);
}

TEST_CASE("bounds at training points are narrow")
{
    RngStream rng(3, "narrow");
    GpModel m = random_model(rng, 8, 2);
    CandidateSet c(m.train().input_matrix());
    const double beta = 9.0;
    ConfidenceBounds b = confidence_bounds(m, beta, c);
    for (Eigen::Index i = 0; i < b.upper.size(); ++i)
        CHECK(b.upper[i] - b.lower[i] <= 2.0 * std::sqrt(beta) * 1e-3 * std::sqrt(m.output_variance()));
}

TEST_CASE("ucb select")
{
    CHECK(ucb_select(make_bounds(vec({0.3}), vec({0.0}), 1.0)) == 0);
    CHECK(ucb_select(make_bounds(vec({1.0, 3.0, 2.0}), vec({0.0, 0.0, 0.0}), 1.0)) == 1);
    CHECK(ucb_select(make_bounds(vec({2.0, 2.0, 2.0}), vec({0.0, 0.0, 0.0}), 1.0)) == 0);
}

TEST_CASE("relevant region examples")
{
    ConfidenceBounds b;
    b.upper = vec({5.0, 1.0});
    b.lower = vec({0.0, 0.5});
    RelevantRegion r = relevant_region(b);
    CHECK(r.y_bullet == 0.5);
    CHECK(r.x_bullet == 1);
    CHECK(r.members == std::vector<std::size_t>{0, 1});

    RelevantRegion flat = relevant_region(make_bounds(vec({1.0, 3.0, 3.0, 2.0}), vec({1.0, 1.0, 2.0, 1.0}), 0.0));
    CHECK(flat.members == std::vector<std::size_t>{1, 2});
}

TEST_CASE("relevant region properties on random models")
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RngStream rng(seed, "region");
        GpModel m = random_model(rng, 6, 2);
        CandidateSet c(lhd_sample(100, 2, rng));
        ConfidenceBounds b = confidence_bounds(m, 4.0, c);
        for (Eigen::Index i = 0; i < b.upper.size(); ++i)
            CHECK(b.upper[i] >= b.lower[i]);
        RelevantRegion r = relevant_region(b);
        REQUIRE(!r.members.empty());
        CHECK(r.contains(r.x_bullet));
        for (std::size_t i : r.members)
            CHECK(b.upper[static_cast<Eigen::Index>(i)] >= r.y_bullet);
        CHECK(std::is_sorted(r.members.begin(), r.members.end()));

        double beta1 = 4.0 * rng.uniform(), beta2 = beta1 + 4.0 * rng.uniform();
        RelevantRegion r1 = relevant_region(make_bounds(b.mean, b.sd, beta1));
        RelevantRegion r2 = relevant_region(make_bounds(b.mean, b.sd, beta2));
        CHECK(std::includes(r2.members.begin(), r2.members.end(), r1.members.begin(), r1.members.end()));
    }
}

TEST_CASE("mice score matches the dense oracle on the 1-D toy")
{
    Dataset data(1);
    data.append(Point::Constant(1, 0.0), 1.0);
    auto k = KernelConfig::matern(2.5, Eigen::VectorXd::Constant(1, 0.3));
    GpModel m = GpModel::condition(data, k, 1e-8, 1e-4, 1.0);
    Eigen::MatrixXd cand(3, 1);
    cand << 0.4, 0.5, 0.6;
    CandidateSet c(cand);
    oracle::Kernel ok{true, 2.5, k.length_scales};
    Eigen::MatrixXd train(1, 1);
    train << 0.0;
    for (std::size_t x = 0; x < 3; ++x) {
        std::vector<std::size_t> rest;
        Eigen::MatrixXd rest_rows(0, 1);
        for (std::size_t j = 0; j < 3; ++j)
            if (j != x) {
                rest.push_back(j);
                rest_rows = oracle::stack(rest_rows, cand.row(static_cast<Eigen::Index>(j)));
            }
        Eigen::VectorXd p = cand.row(static_cast<Eigen::Index>(x)).transpose();
        oracle::Kriging o(ok, train, Eigen::VectorXd::Constant(1, 1.0), 1e-8, 1.0);
        double expect = o.corr_variance(p) / oracle::nugget_variance(ok, rest_rows, p, 1.0);
        CHECK(std::abs(mice_score(m, c, x, rest, 1.0) - expect) < 1e-8);
    }
}

TEST_CASE("mice score limits and symmetry")
{
    RngStream rng(9, "mice-limits");
    GpModel m = random_model(rng, 6, 2);
    CandidateSet c(lhd_sample(8, 2, rng));
    std::vector<std::size_t> none;
    double prior = mice_score(m, c, 3, none, 1.0);
    CHECK(std::abs(prior - m.variance_many(c.points.row(3))[0] / m.output_variance()) < 1e-14);

    std::vector<std::size_t> rest{0, 1, 2, 4, 5, 6, 7};
    double s = mice_score(m, c, 3, rest, 1.0);
    std::vector<std::size_t> shuffled = rest;
    rng.shuffle(std::span<std::size_t>(shuffled));
    CHECK(std::abs(mice_score(m, c, 3, shuffled, 1.0) - s) < 1e-12);
    CHECK_THROWS_AS(mice_score(m, c, 3, rest, 0.0), ConfigError);
    std::vector<std::size_t> bad{3};
    CHECK_THROWS_AS(mice_score(m, c, 3, bad, 1.0), ConfigError);

    // Short length scale: a far candidate decorrelates from everything.
    Dataset near(1);
    near.append(Point::Constant(1, 0.0), 0.0);
    near.append(Point::Constant(1, 0.01), 1.0);
    GpModel tight = GpModel::condition(near, KernelConfig::matern(2.5, Eigen::VectorXd::Constant(1, 0.01)), 1e-8, 1e-4);
    Eigen::MatrixXd cand(3, 1);
    cand << 0.02, 0.03, 1.0;
    CandidateSet cc(cand);
    std::vector<std::size_t> others{0, 1};
    CHECK(std::abs(mice_score(tight, cc, 2, others, 1.0) - 1.0) < 1e-9);
}

TEST_CASE("alm select")
{
    RngStream rng(10, "alm");
    GpModel m = random_model(rng, 6, 1);
    Eigen::MatrixXd cand(2, 1);
    cand << m.train().inputs()[0][0], m.train().inputs()[0][0] < 0.5 ? 0.999 : 0.001;
    CandidateSet c(cand);
    RelevantRegion both;
    both.members = {0, 1};
    CHECK(alm_select(m, both, c) == 1);
    RelevantRegion single;
    single.members = {0};
    CHECK(alm_select(m, single, c) == 0);

    Eigen::MatrixXd three(3, 1);
    three << 0.1, 0.5, 0.9;
    Dataset d(1);
    d.append(Point::Constant(1, 0.1), 0.0);
    d.append(Point::Constant(1, 0.45), 1.0);
    d.append(Point::Constant(1, 0.88), 0.0);
    GpModel dm = GpModel::condition(d, KernelConfig::matern(2.5, Eigen::VectorXd::Constant(1, 0.2)), 1e-8, 1e-4);
    CandidateSet c3(three);
    RelevantRegion all;
    all.members = {0, 1, 2};
    Eigen::VectorXd v = dm.variance_many(three);
    std::size_t expect = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (v[static_cast<Eigen::Index>(i)] > v[static_cast<Eigen::Index>(expect)])
            expect = i;
    CHECK(alm_select(dm, all, c3) == expect);
}

TEST_CASE("batch structure")
{
    RngStream rng(12, "batch");
    GpModel m = random_model(rng, 8, 2);
    for (FillRule rule : {FillRule::Mice, FillRule::Alm}) {
        CandidateSet c(lhd_sample(60, 2, rng));
        ConfidenceBounds b = confidence_bounds(m, 4.0, c);
        RelevantRegion r = relevant_region(b);
        CandidateSet c2 = c;
        BatchOptions opts;
        opts.batch_size = 5;
        opts.rule = rule;
        Batch batch = select_batch(m, b, r, c, opts);
        REQUIRE(batch.size() == 5);
        CHECK(batch.indices.front() == ucb_select(b));
        CHECK(batch.provenance.front() == Provenance::UCB);
        for (std::size_t k = 1; k < 5; ++k)
            CHECK(batch.provenance[k] == (rule == FillRule::Mice ? Provenance::MICE : Provenance::ALM));
        std::set<std::size_t> distinct(batch.indices.begin(), batch.indices.end());
        CHECK(distinct.size() == 5);
        for (std::size_t i : batch.indices)
            CHECK(c.selected[i]);
        Batch again = select_batch(m, b, r, c2, opts);
        CHECK(again.indices == batch.indices);
    }
}

TEST_CASE("batch of one is the UCB point")
{
    RngStream rng(13, "k1");
    GpModel m = random_model(rng, 6, 2);
    CandidateSet c(lhd_sample(30, 2, rng));
    ConfidenceBounds b = confidence_bounds(m, 2.0, c);
    Batch batch = mice_select_batch(m, b, relevant_region(b), c, 1, 1.0);
    CHECK(batch.indices == std::vector<std::size_t>{ucb_select(b)});
    CandidateSet small(lhd_sample(3, 2, rng));
    ConfidenceBounds sb = confidence_bounds(m, 2.0, small);
    CHECK_THROWS_AS(mice_select_batch(m, sb, relevant_region(sb), small, 4, 1.0), ConfigError);
}

TEST_CASE("region with exactly K-1 free members is used up")
{
    RngStream rng(14, "forced");
    GpModel m = random_model(rng, 6, 2);
    CandidateSet c(lhd_sample(20, 2, rng));
    ConfidenceBounds b = confidence_bounds(m, 2.0, c);
    const std::size_t first = ucb_select(b);
    RelevantRegion r;
    r.members = {first};
    for (std::size_t i = 0; i < 20 && r.members.size() < 4; ++i)
        if (i != first)
            r.members.push_back(i);
    std::sort(r.members.begin(), r.members.end());
    Batch batch = mice_select_batch(m, b, r, c, 4, 1.0);
    std::set<std::size_t> got(batch.indices.begin(), batch.indices.end());
    std::set<std::size_t> want(r.members.begin(), r.members.end());
    CHECK(got == want);
}

TEST_CASE("greedy matches exhaustive search on tiny instances")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RngStream rng(seed, "tiny");
        const std::size_t d = 1 + seed % 2;
        const std::size_t n_cand = 4 + seed % 3;
        GpModel m = random_model(rng, d + 2, d);
        Eigen::MatrixXd cand = lhd_sample(n_cand, d, rng);
        CandidateSet c(cand);
        ConfidenceBounds b = confidence_bounds(m, 1.0 + 4.0 * rng.uniform(), c);
        RelevantRegion r = relevant_region(b);
        for (std::size_t k = 1; k <= 3; ++k) {
            CandidateSet work = c;
            Batch batch = mice_select_batch(m, b, r, work, k, 1.0);
            oracle::MiceSearch search{{true, 2.5, m.kernel().length_scales}, m.train().input_matrix(), cand,
                                      r.members, m.jitter(), 1.0};
            CHECK(batch.indices == search.batch(ucb_select(b), k));
        }
    }
}
