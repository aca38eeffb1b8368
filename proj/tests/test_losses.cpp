#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fd.hpp"
#include "hod/losses.hpp"
#include "hod/rng.hpp"

using namespace hod;

namespace {

ContrastiveBatch batch_from_space(const Mat& space_rows, const std::vector<int>& labels,
                                  Curvature c) {
    ContrastiveBatch b;
    b.labels = labels;
    for (Eigen::Index i = 0; i < space_rows.rows(); ++i) {
        b.points.push_back(LorentzPoint::from_space(space_rows.row(i).transpose(), c));
    }
    return b;
}

// Random batch with guaranteed positives and no near-coincident pairs, so
// finite differences stay away from the acosh clamp.
Mat random_space(Eigen::Index B, Eigen::Index n, Rng& rng) {
    Mat space(B, n);
    for (;;) {
        for (Eigen::Index i = 0; i < B; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) space(i, j) = rng.normal(0.0, 1.2);
        }
        double min_gap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < B; ++i) {
            for (Eigen::Index j = i + 1; j < B; ++j) {
                min_gap = std::min(min_gap, (space.row(i) - space.row(j)).norm());
            }
        }
        if (min_gap > 0.05) return space;
    }
}

} // namespace

TEST_CASE("coincident batch evaluates to 4 log 3") {
    Curvature c(1.0);
    Vec s(2);
    s << 0.3, -0.2;
    ContrastiveBatch b;
    for (int i = 0; i < 4; ++i) b.points.push_back(LorentzPoint::from_space(s, c));
    b.labels = {0, 0, 1, 1};
    CHECK(hsup_loss(b, 1.0, c) == doctest::Approx(4.394449154672439).epsilon(1e-12));
    CHECK(std::abs(hsup_loss(b, 1.0, c) - 4.0 * std::log(3.0)) <= 1e-10);
}

TEST_CASE("two-cluster 1-D batch, brute-force value") {
    // Four points on the 1-D hyperboloid at geodesic coordinates +1,+1,-1,-1
    // with labels (0,0,1,1): within-class distance 0, across 2. Each anchor
    // contributes log(1 + 2 e^-2); the total is the frozen brute-force value.
    Curvature c(1.0);
    const double sh = 1.1752011936438014; // space coordinate of the t=1 point
    Mat space(4, 1);
    space << sh, sh, -sh, -sh;
    ContrastiveBatch b = batch_from_space(space, {0, 0, 1, 1}, c);
    CHECK(lorentz_distance(b.points[0], b.points[2], c) == doctest::Approx(2.0).epsilon(1e-12));
    double per_anchor = std::log(1.0 + 2.0 * std::exp(-2.0));
    CHECK(per_anchor == doctest::Approx(0.23954476622188453).epsilon(1e-14));
    // coincident within-class pairs carry acosh round-off of order sqrt(eps),
    // which bounds the achievable agreement near 1e-8
    CHECK(std::abs(hsup_loss(b, 1.0, c) - 0.9581790648875381) <= 1e-6);
    CHECK(std::abs(hsup_loss(b, 1.0, c) - 4.0 * per_anchor) <= 1e-7);
}

TEST_CASE("huge temperature flattens every anchor term to log |A|") {
    Curvature c(1.0);
    Rng rng(31);
    Mat space = random_space(6, 3, rng);
    ContrastiveBatch b = batch_from_space(space, {0, 0, 1, 1, 2, 2}, c);
    CHECK(hsup_loss(b, 1e6, c) == doctest::Approx(6.0 * std::log(5.0)).epsilon(1e-4));
    // gradients decay like 1/tau in the flat-loss limit
    auto gnorm = [&](double tau) {
        HsupGrad g = hsup_loss_grad(b, tau, curvature_param_from(1.0));
        double gn = 0.0;
        for (const Vec& v : g.space) gn += v.squaredNorm();
        return std::sqrt(gn);
    };
    CHECK(gnorm(1e6) <= 1e-5);
    CHECK(gnorm(1e9) <= 1e-8);
    CHECK(gnorm(1e9) <= gnorm(1e6) * 1e-2);
}

TEST_CASE("permutation invariance") {
    Curvature c(0.5);
    Rng rng(8);
    Mat space = random_space(6, 2, rng);
    std::vector<int> labels = {0, 1, 0, 2, 2, 1};
    ContrastiveBatch b = batch_from_space(space, labels, c);
    double base = hsup_loss(b, 0.3, c);

    std::vector<int> perm = {3, 0, 5, 1, 4, 2};
    ContrastiveBatch shuffled;
    for (int idx : perm) {
        shuffled.points.push_back(b.points[idx]);
        shuffled.labels.push_back(b.labels[idx]);
    }
    CHECK(hsup_loss(shuffled, 0.3, c) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("sum structure: total is the sum of per-anchor terms") {
    // Uniform two-cluster batches have identical per-anchor terms, so the
    // total must scale linearly with the anchor count.
    Curvature c(1.0);
    const double sh = 1.1752011936438014;
    for (int per_class : {2, 3, 5}) {
        Mat space(2 * per_class, 1);
        std::vector<int> labels;
        for (int i = 0; i < per_class; ++i) {
            space(i, 0) = sh;
            labels.push_back(0);
        }
        for (int i = 0; i < per_class; ++i) {
            space(per_class + i, 0) = -sh;
            labels.push_back(1);
        }
        ContrastiveBatch b = batch_from_space(space, labels, c);
        // every anchor: per_class-1 positives at distance 0, per_class
        // negatives at distance 2, |A| = 2 per_class - 1
        double term = std::log((per_class - 1) + per_class * std::exp(-2.0));
        CHECK(hsup_loss(b, 1.0, c) ==
              doctest::Approx(2.0 * per_class * term).epsilon(1e-7));
    }
}

TEST_CASE("anchor without positive is rejected by name") {
    Curvature c(1.0);
    Mat space(3, 2);
    space << 0.1, 0.2, 0.4, -0.3, -0.6, 0.5;
    ContrastiveBatch b = batch_from_space(space, {0, 0, 7}, c);
    CHECK_THROWS_WITH_AS(hsup_loss(b, 0.1, c),
                         doctest::Contains("anchor 2"), InvalidBatchError);
    ContrastiveBatch single;
    single.points.push_back(LorentzPoint::origin(2, c));
    single.labels = {0};
    CHECK_THROWS_AS(hsup_loss(single, 0.1, c), InvalidBatchError);

    ContrastiveBatch ok = batch_from_space(space, {0, 1, 0}, c);
    ok.labels = {0, 0, 0};
    CHECK_THROWS_AS(hsup_loss(ok, 0.0, c), ConfigError);
    CHECK_THROWS_AS(hsup_loss(ok, -1.0, c), ConfigError);
}

TEST_CASE("mirror-symmetric configuration has cancelling gradients") {
    Curvature c(1.0);
    Mat space(4, 2);
    space << 0.9, 0.4, 0.9, 0.4, -0.9, -0.4, -0.9, -0.4;
    ContrastiveBatch b = batch_from_space(space, {0, 0, 1, 1}, c);
    HsupGrad g = hsup_loss_grad(b, 0.5, curvature_param_from(1.0));
    Vec sum = Vec::Zero(2);
    for (const Vec& v : g.space) sum += v;
    CHECK(sum.norm() <= 1e-10);
}

TEST_CASE("contrastive gradients match finite differences") {
    Rng rng(77);
    int instances = 0;
    while (instances < 22) {
        Eigen::Index B = 4 + static_cast<Eigen::Index>(rng.below(4)); // 4..7
        Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(2));
        double tau = rng.uniform(0.15, 1.5);
        double rho = rng.uniform(-0.5, 1.5);
        Mat space = random_space(B, n, rng);
        std::vector<int> labels;
        for (Eigen::Index i = 0; i < B; ++i) labels.push_back(static_cast<int>(i / 2));
        if (B % 2 == 1) labels[B - 1] = labels[B - 2];

        auto eval = [&]() {
            Curvature c = curvature_from_param(rho);
            return hsup_loss(batch_from_space(space, labels, c), tau, c);
        };
        HsupGrad g = hsup_loss_grad(batch_from_space(space, labels, curvature_from_param(rho)),
                                    tau, rho);
        CHECK(g.value == doctest::Approx(eval()).epsilon(1e-12));

        double worst = 0.0;
        for (Eigen::Index i = 0; i < B; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double fd = central_fd(space(i, j), eval);
                worst = std::max(worst, grad_rel_err(g.space[i][j], fd));
            }
        }
        double fd_rho = central_fd(rho, eval);
        worst = std::max(worst, grad_rel_err(g.curvature_param, fd_rho));
        CHECK(worst <= 1e-4);
        ++instances;
    }
}

TEST_CASE("uncertainty loss worked values") {
    Curvature c(1.0);
    Hyperplane h;
    h.offset = 0.0;
    h.orientation = Vec::Zero(2);
    h.orientation[0] = 1.0;

    Vec on_plane(2);
    on_plane << 0.0, 0.8;
    std::vector<LorentzPoint> id = {LorentzPoint::from_space(on_plane, c)};
    Vec on_plane2(2);
    on_plane2 << 0.0, -0.3;
    std::vector<LorentzPoint> out = {LorentzPoint::from_space(on_plane2, c)};
    CHECK(uncertainty_loss(id, out, h, c) ==
          doctest::Approx(1.3862943611198906).epsilon(1e-12)); // 2 log 2

    // saturated pair: ID far on the positive side, outlier far negative
    auto geodesic = [&](double t) {
        Vec s(2);
        s << std::sinh(t), 0.0;
        return LorentzPoint::from_space(s, c);
    };
    std::vector<LorentzPoint> id_far = {geodesic(20.0)};
    std::vector<LorentzPoint> out_far = {geodesic(-20.0)};
    CHECK(uncertainty_loss(id_far, out_far, h, c) <= 1e-8);

    // deeper saturation pushes every gradient entry into the logistic tail
    id_far = {geodesic(25.0)};
    out_far = {geodesic(-25.0)};
    UncertaintyGrad g = uncertainty_loss_grad(id_far, out_far, h, curvature_param_from(1.0));
    double mag = std::abs(g.plane.offset) + g.plane.orientation.norm() +
                 std::abs(g.curvature_param);
    for (const Vec& v : g.id_space) mag += v.norm();
    CHECK(mag <= 1e-7);
}

TEST_CASE("ID term slope at the plane is one half") {
    // ID point sits exactly on the plane (logit 0); the outlier is parked
    // deep on the negative side so its term is flat. With |o| = 1 the logit
    // depends on the offset as -a, so dU/da = sigma(0) = 1/2.
    Curvature c(1.0);
    Hyperplane h;
    h.offset = 0.0;
    h.orientation = Vec::Zero(2);
    h.orientation[0] = 1.0;
    std::vector<LorentzPoint> id = {LorentzPoint::origin(2, c)};
    Vec far(2);
    far << std::sinh(-30.0), 0.0;
    std::vector<LorentzPoint> out = {LorentzPoint::from_space(far, c)};
    UncertaintyGrad g = uncertainty_loss_grad(id, out, h, curvature_param_from(1.0));
    CHECK(g.plane.offset == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("swapping internally mirrored sets leaves the loss unchanged") {
    Curvature c(1.0);
    Hyperplane h;
    h.offset = 0.0;
    h.orientation = Vec::Zero(2);
    h.orientation << 1.0, 0.0;
    auto geodesic = [&](double t) {
        Vec s(2);
        s << std::sinh(t), 0.0;
        return LorentzPoint::from_space(s, c);
    };
    std::vector<LorentzPoint> a = {geodesic(0.7), geodesic(-0.7)};
    std::vector<LorentzPoint> b = {geodesic(1.4), geodesic(-1.4)};
    CHECK(uncertainty_loss(a, b, h, c) == doctest::Approx(uncertainty_loss(b, a, h, c)).epsilon(1e-13));
}

TEST_CASE("uncertainty gradients match finite differences") {
    Rng rng(101);
    for (int inst = 0; inst < 20; ++inst) {
        Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(2));
        double rho = rng.uniform(-0.5, 1.5);
        Mat id_s(3, n), out_s(2, n);
        for (Eigen::Index i = 0; i < 3; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) id_s(i, j) = rng.normal(0.0, 1.0);
        }
        for (Eigen::Index i = 0; i < 2; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) out_s(i, j) = rng.normal(0.0, 1.0);
        }
        Hyperplane h = random_hyperplane(n, rng);
        h.offset = rng.uniform(-1.0, 1.0);
        h.orientation *= rng.uniform(0.3, 2.0);

        // outliers are stop-gradient constants: fixed ambient points that do
        // not follow the curvature perturbation
        std::vector<LorentzPoint> out;
        for (Eigen::Index i = 0; i < 2; ++i) {
            out.push_back(
                LorentzPoint::from_space(out_s.row(i).transpose(), curvature_from_param(rho)));
        }
        auto eval = [&]() {
            Curvature c = curvature_from_param(rho);
            std::vector<LorentzPoint> id;
            for (Eigen::Index i = 0; i < 3; ++i) {
                id.push_back(LorentzPoint::from_space(id_s.row(i).transpose(), c));
            }
            return uncertainty_loss(id, out, h, c);
        };

        Curvature c0 = curvature_from_param(rho);
        std::vector<LorentzPoint> id;
        for (Eigen::Index i = 0; i < 3; ++i) {
            id.push_back(LorentzPoint::from_space(id_s.row(i).transpose(), c0));
        }
        UncertaintyGrad g = uncertainty_loss_grad(id, out, h, rho);
        CHECK(g.value == doctest::Approx(eval()).epsilon(1e-12));

        double worst = grad_rel_err(g.plane.offset, central_fd(h.offset, eval));
        for (Eigen::Index j = 0; j < n; ++j) {
            worst = std::max(worst, grad_rel_err(g.plane.orientation[j],
                                                 central_fd(h.orientation[j], eval)));
        }
        for (Eigen::Index i = 0; i < 3; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                worst = std::max(worst, grad_rel_err(g.id_space[i][j], central_fd(id_s(i, j), eval)));
            }
        }
        worst = std::max(worst, grad_rel_err(g.curvature_param, central_fd(rho, eval)));
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("total loss combination") {
    CHECK(total_loss(1.0, 2.0, 0.1) == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(total_loss(0.37, 99.0, 0.0) == 0.37);
    CHECK_THROWS_AS(total_loss(1.0, 1.0, -0.1), ConfigError);
    CHECK_THROWS_AS(total_loss(std::nan(""), 1.0, 0.1), NumericError);
}

TEST_CASE("empty sets are rejected") {
    Curvature c(1.0);
    Hyperplane h;
    h.orientation = Vec::Ones(2);
    std::vector<LorentzPoint> some = {LorentzPoint::origin(2, c)};
    std::vector<LorentzPoint> none;
    CHECK_THROWS_AS(uncertainty_loss(none, some, h, c), InvalidBatchError);
    CHECK_THROWS_AS(uncertainty_loss(some, none, h, c), InvalidBatchError);
}
