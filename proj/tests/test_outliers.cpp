#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hod/bank.hpp"
#include "hod/outliers.hpp"
#include "hod/rng.hpp"

using namespace hod;

namespace {

LorentzPoint point_from(std::initializer_list<double> space, Curvature c) {
    Vec s(static_cast<Eigen::Index>(space.size()));
    Eigen::Index i = 0;
    for (double v : space) s[i++] = v;
    return LorentzPoint::from_space(s, c);
}

} // namespace

TEST_CASE("rng repeats bit for bit under the same seed") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(12345), d(12345);
    for (int i = 0; i < 100; ++i) {
        CHECK(c.uniform() == d.uniform());
        CHECK(c.normal() == d.normal());
    }
}

TEST_CASE("rng child streams depend on the seed, not consumption") {
    Rng parent(99);
    Rng fresh(99);
    parent.normal();
    parent.normal();
    parent.below(10);
    Rng s_consumed = parent.stream(3);
    Rng s_fresh = fresh.stream(3);
    for (int i = 0; i < 20; ++i) {
        CHECK(s_consumed.next_u64() == s_fresh.next_u64());
    }
    // distinct indices give distinct streams
    CHECK(fresh.stream(0).next_u64() != fresh.stream(1).next_u64());
}

TEST_CASE("rng below stays in range and shuffle is deterministic") {
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.below(7) < 7);
    }
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7}, v2 = v1;
    Rng r1(42), r2(42);
    r1.shuffle(v1.begin(), v1.end());
    r2.shuffle(v2.begin(), v2.end());
    CHECK(v1 == v2);
    std::vector<int> sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("wrapped gaussian with sigma 0 returns the centre exactly") {
    Curvature c(0.7);
    LorentzPoint mu = point_from({1.2, -0.4, 2.0}, c);
    Rng rng(1);
    LorentzPoint s = wrapped_gaussian_sample(mu, 0.0, c, rng);
    CHECK(s.coords() == mu.coords());
}

TEST_CASE("wrapped gaussian at the origin is a plain tangent draw") {
    Curvature c(1.0);
    const Eigen::Index n = 5;
    LorentzPoint o = LorentzPoint::origin(n, c);
    const double sigma = 0.5;

    Rng rng(77);
    LorentzPoint s = wrapped_gaussian_sample(o, sigma, c, rng);

    Rng replay(77);
    Vec expected(n);
    for (Eigen::Index i = 0; i < n; ++i) expected[i] = sigma * replay.normal();

    TangentVector v = logmap(o, s, c);
    CHECK(std::abs(v.components()[0]) < 1e-12);
    for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(v.components()[i + 1] == doctest::Approx(expected[i]).epsilon(1e-9));
    }
}

TEST_CASE("wrapped gaussian moments over 1e5 draws") {
    Curvature c(1.0);
    const Eigen::Index n = 4;
    const double sigma = 0.1;
    const int N = 100000;
    LorentzPoint mu = point_from({0.6, -0.3, 0.8, 0.2}, c);
    LorentzPoint o = LorentzPoint::origin(n, c);

    Rng rng(2024);
    Vec sum = Vec::Zero(n);
    Vec sumsq = Vec::Zero(n);
    double worst_violation = 0.0;
    double worst_time = 0.0;
    for (int k = 0; k < N; ++k) {
        LorentzPoint s = wrapped_gaussian_sample(mu, sigma, c, rng);
        worst_violation = std::max(worst_violation, manifold_violation(s, c));
        // Undo the transport so the draw is expressed back in the origin
        // tangent frame where its covariance is diagonal.
        TangentVector back = parallel_transport(mu, o, logmap(mu, s, c), c);
        worst_time = std::max(worst_time, std::abs(back.components()[0]));
        Vec u = back.components().tail(n);
        sum += u;
        sumsq += u.cwiseProduct(u);
    }
    CHECK(worst_violation <= 1e-9);
    CHECK(worst_time <= 1e-10);

    const double mean_bound = 4.0 * sigma / std::sqrt(static_cast<double>(N));
    for (Eigen::Index i = 0; i < n; ++i) {
        double mean = sum[i] / N;
        double var = (sumsq[i] - N * mean * mean) / (N - 1);
        CHECK(std::abs(mean) <= mean_bound);
        CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.05));
    }
}

TEST_CASE("select_uncertain picks the smallest space norms") {
    Curvature c(1.0);
    std::vector<LorentzPoint> pts{point_from({0.5}, c), point_from({2.0}, c),
                                  point_from({3.0}, c)};
    CHECK(select_uncertain(pts, 1) == std::vector<Eigen::Index>{0});

    std::vector<LorentzPoint> mixed{point_from({3.0}, c), point_from({0.5}, c),
                                    point_from({-2.0}, c)};
    CHECK(select_uncertain(mixed, 3) == std::vector<Eigen::Index>{1, 2, 0});

    std::vector<LorentzPoint> ties{point_from({1.0}, c), point_from({-1.0}, c),
                                   point_from({1.0}, c)};
    CHECK(select_uncertain(ties, 2) == std::vector<Eigen::Index>{0, 1});

    CHECK_THROWS_AS(select_uncertain(pts, 0), ConfigError);
    CHECK_THROWS_AS(select_uncertain(pts, 4), ConfigError);
}

TEST_CASE("select_uncertain accepts a bank") {
    Curvature c(1.0);
    std::vector<LorentzPoint> pts{point_from({2.0, 0.0}, c), point_from({0.1, 0.1}, c)};
    EmbeddingBank bank(pts, {0, 1}, c);
    CHECK(select_uncertain(bank, 1) == std::vector<Eigen::Index>{1});
}

TEST_CASE("synthesize produces grouped on-manifold candidates deterministically") {
    Curvature c(1.5);
    std::vector<LorentzPoint> seeds{point_from({1.0, 0.5}, c), point_from({-0.5, 2.0}, c)};
    OutlierConfig cfg;
    cfg.sigma = 0.3;
    cfg.candidates_per_seed = 3;
    cfg.keep_per_seed = 2;

    Rng rng(11);
    CandidateSet a = synthesize(seeds, cfg, c, rng);
    REQUIRE(a.candidates.size() == 6);
    CHECK(a.seed_index == std::vector<Eigen::Index>{0, 0, 0, 1, 1, 1});
    for (const auto& p : a.candidates) {
        CHECK(manifold_violation(p, c) <= 1e-9);
    }

    CandidateSet b = synthesize(seeds, cfg, c, Rng(11));
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        CHECK(a.candidates[i].coords() == b.candidates[i].coords());
    }

    cfg.sigma = 1e-300; // validate() wants > 0; this is effectively zero
    CandidateSet z = synthesize(seeds, cfg, c, Rng(11));
    for (std::size_t i = 0; i < z.candidates.size(); ++i) {
        const LorentzPoint& seed = seeds[static_cast<std::size_t>(z.seed_index[i])];
        CHECK((z.candidates[i].coords() - seed.coords()).norm() <= 1e-12);
    }

    CHECK_THROWS_AS(synthesize({}, cfg, c, Rng(1)), InvalidBatchError);
}

TEST_CASE("filter keeps close candidates with the largest norms") {
    Curvature c(1.0);
    OutlierConfig cfg;
    cfg.keep_per_seed = 2;
    cfg.candidates_per_seed = 20;

    std::vector<LorentzPoint> seeds{point_from({2.0}, c)};
    CandidateSet cands;
    cands.candidates = {point_from({3.0}, c), point_from({4.5}, c), point_from({-0.5}, c)};
    cands.seed_index = {0, 0, 0};
    // displacements from 2.0: 1.0 (in), 2.5 (out), 2.5 (out)
    SynthesizedSet v = filter_outliers(cands, seeds, cfg);
    REQUIRE(v.outliers.size() == 1);
    CHECK(v.outliers[0].space()[0] == 3.0);
    CHECK(v.seed_index == std::vector<Eigen::Index>{0});

    // survivors with norms 5, 1, 3 around a seed of norm 4: keep (5, 3)
    std::vector<LorentzPoint> seeds4{point_from({4.0}, c)};
    CandidateSet c4;
    c4.candidates = {point_from({5.0}, c), point_from({1.0}, c), point_from({3.0}, c)};
    c4.seed_index = {0, 0, 0};
    SynthesizedSet v4 = filter_outliers(c4, seeds4, cfg);
    REQUIRE(v4.outliers.size() == 2);
    CHECK(v4.outliers[0].space()[0] == 5.0);
    CHECK(v4.outliers[1].space()[0] == 3.0);

    // a seed may end up with nothing
    std::vector<LorentzPoint> tiny{point_from({0.01}, c)};
    CandidateSet far;
    far.candidates = {point_from({1.0}, c)};
    far.seed_index = {0};
    CHECK(filter_outliers(far, tiny, cfg).outliers.empty());
}

TEST_CASE("near-zero sigma with keep 1 reproduces the seeds") {
    Curvature c(2.0);
    std::vector<LorentzPoint> seeds{point_from({1.0, 0.0}, c), point_from({0.0, -3.0}, c)};
    OutlierConfig cfg;
    cfg.sigma = 1e-300;
    cfg.candidates_per_seed = 4;
    cfg.keep_per_seed = 1;
    CandidateSet cands = synthesize(seeds, cfg, c, Rng(8));
    SynthesizedSet v = filter_outliers(cands, seeds, cfg);
    REQUIRE(v.outliers.size() == seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        CHECK((v.outliers[i].coords() - seeds[i].coords()).norm() <= 1e-12);
        CHECK(v.seed_index[i] == static_cast<Eigen::Index>(i));
    }
}

TEST_CASE("full pipeline is deterministic and respects the filter rule") {
    Curvature c(1.0);
    Rng make(31);
    std::vector<LorentzPoint> pts;
    for (int i = 0; i < 40; ++i) {
        Vec s(3);
        s << make.normal(), make.normal(), make.normal();
        pts.push_back(LorentzPoint::from_space(1.5 * s, c));
    }
    OutlierConfig cfg;
    cfg.sigma = 0.4;
    cfg.candidates_per_seed = 10;
    cfg.keep_per_seed = 3;

    SynthesizedSet a = synthesize_outliers(pts, cfg, c, Rng(55));
    SynthesizedSet b = synthesize_outliers(pts, cfg, c, Rng(55));
    REQUIRE(a.outliers.size() == b.outliers.size());
    for (std::size_t i = 0; i < a.outliers.size(); ++i) {
        CHECK(a.outliers[i].coords() == b.outliers[i].coords());
        CHECK(a.seed_index[i] == b.seed_index[i]);
    }

    // seeds_per_batch = 0 resolves to 40/10 = 4 seeds
    CHECK(a.outliers.size() <= 4 * 3);
    std::vector<Eigen::Index> low = select_uncertain(pts, 4);
    for (std::size_t i = 0; i < a.outliers.size(); ++i) {
        const Eigen::Index s = a.seed_index[i];
        CHECK(std::find(low.begin(), low.end(), s) != low.end());
        const double disp = (a.outliers[i].space() - pts[s].space()).norm();
        CHECK(disp < pts[s].space().norm());
        CHECK(manifold_violation(a.outliers[i], c) <= 1e-9);
    }
}

TEST_CASE("outlier config validation") {
    OutlierConfig ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.seed_count(64) == 6);
    CHECK(ok.seed_count(5) == 1);
    ok.seeds_per_batch = 10;
    CHECK(ok.seed_count(4) == 4);

    OutlierConfig bad = ok;
    bad.sigma = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.keep_per_seed = 21;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.candidates_per_seed = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ok;
    bad.start_iteration = -5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("embedding bank validates its inputs") {
    Curvature c(1.0);
    std::vector<LorentzPoint> pts{point_from({1.0, 2.0}, c), point_from({0.0, -1.0}, c)};
    EmbeddingBank bank(pts, {0, 1}, c);
    CHECK(bank.size() == 2);
    CHECK(bank.dim() == 2);
    CHECK(bank.labels()[1] == 1);

    CHECK_THROWS_AS(EmbeddingBank({}, {}, c), DataError);
    CHECK_THROWS_AS(EmbeddingBank(pts, {0}, c), DataError);

    std::vector<LorentzPoint> ragged{point_from({1.0, 2.0}, c), point_from({1.0}, c)};
    CHECK_THROWS_AS(EmbeddingBank(ragged, {0, 1}, c), DimensionError);

    // points built for one curvature are off the sheet for another
    CHECK_THROWS_AS(EmbeddingBank(pts, {0, 1}, Curvature(4.0)), NumericError);
}
