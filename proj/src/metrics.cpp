#include "hod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace hod {

namespace {

void check_finite(const std::vector<double>& v, const char* side) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw DataError(std::string("non-finite score in ") + side + " set");
        }
    }
}

void check_sides(const ScoreSet& s) {
    if (s.id_scores.empty() || s.ood_scores.empty()) {
        throw DataError("score set needs both ID and OOD entries");
    }
    check_finite(s.id_scores, "ID");
    check_finite(s.ood_scores, "OOD");
}

// Recursive Simpson refinement with Richardson extrapolation.
double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adapt(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace

double auroc(const ScoreSet& scores) {
    check_sides(scores);
    const std::size_t n_id = scores.id_scores.size();
    const std::size_t n_ood = scores.ood_scores.size();
    std::vector<std::pair<double, bool>> all; // (score, is_id)
    all.reserve(n_id + n_ood);
    for (double s : scores.id_scores) all.emplace_back(s, true);
    for (double s : scores.ood_scores) all.emplace_back(s, false);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double id_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1 .. j
        for (std::size_t t = i; t < j; ++t) {
            if (all[t].second) id_rank_sum += midrank;
        }
        i = j;
    }
    const double u = id_rank_sum - 0.5 * static_cast<double>(n_id) * static_cast<double>(n_id + 1);
    return u / (static_cast<double>(n_id) * static_cast<double>(n_ood));
}

double fpr_at_tpr(const ScoreSet& scores, double tpr) {
    check_sides(scores);
    if (!(tpr > 0.0) || tpr > 1.0) {
        throw ConfigError("tpr must be in (0, 1], got " + std::to_string(tpr));
    }
    const auto n = static_cast<Eigen::Index>(scores.id_scores.size());
    // smallest m with m/n >= tpr; the ceil alone can overshoot by one when
    // tpr * n rounds just above an integer
    auto m = static_cast<Eigen::Index>(std::ceil(tpr * static_cast<double>(n)));
    if (m > 1 && static_cast<double>(m - 1) / static_cast<double>(n) >= tpr) --m;
    m = std::clamp<Eigen::Index>(m, 1, n);

    std::vector<double> id_sorted = scores.id_scores;
    std::sort(id_sorted.begin(), id_sorted.end(), std::greater<>());
    const double lambda = id_sorted[static_cast<std::size_t>(m - 1)];

    std::size_t false_positives = 0;
    for (double s : scores.ood_scores) {
        if (s >= lambda) ++false_positives;
    }
    return static_cast<double>(false_positives) / static_cast<double>(scores.ood_scores.size());
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) {
        throw DataError("welch_t_test: both samples need at least 2 values");
    }
    check_finite(a, "first");
    check_finite(b, "second");
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    auto sample_var = [](const std::vector<double>& v, double mean) {
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        return acc / (static_cast<double>(v.size()) - 1.0);
    };
    const double va = sample_var(a, ma);
    const double vb = sample_var(b, mb);
    const double se2 = va / na + vb / nb;

    WelchResult r;
    if (se2 == 0.0) {
        if (ma == mb) {
            r.t = 0.0;
            r.df = na + nb - 2.0;
            r.p = 1.0;
        } else {
            r.t = ma > mb ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
            r.df = std::min(na, nb) - 1.0;
            r.p = 0.0;
            r.degenerate = true;
        }
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 /
           ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw ConfigError("regularized_incomplete_beta: a and b must be positive finite");
    }
    if (std::isnan(x)) {
        throw NumericError("regularized_incomplete_beta: x is NaN");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) {
        return 1.0 - regularized_incomplete_beta(1.0 - x, b, a);
    }
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double tol = 1e-11;
    if (a >= 1.0) {
        // integrand is bounded on [0, x]; u = 1 is never reached here because
        // of the reflection above
        auto f = [&](double u) {
            if (u <= 0.0) return a > 1.0 ? 0.0 : std::exp((b - 1.0) * std::log1p(-u) - log_beta);
            return std::exp((a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - log_beta);
        };
        return integrate(f, 0.0, x, tol);
    }
    // u = x s^{1/a} absorbs the u^{a-1} singularity at the origin:
    // the integral becomes (x^a / a) * int_0^1 (1 - x s^{1/a})^{b-1} ds
    const double scale = std::exp(a * std::log(x) - std::log(a) - log_beta);
    auto g = [&](double s) {
        const double u = s <= 0.0 ? 0.0 : x * std::pow(s, 1.0 / a);
        return scale * std::exp((b - 1.0) * std::log1p(-u));
    };
    return integrate(g, 0.0, 1.0, tol);
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) {
        throw ConfigError("student_t_two_sided_p: df must be positive");
    }
    if (std::isnan(t)) {
        throw NumericError("student_t_two_sided_p: t is NaN");
    }
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(x, 0.5 * df, 0.5);
}

Summary mean_std(const std::vector<double>& values) {
    if (values.empty()) {
        throw DataError("mean_std: no values");
    }
    Summary s;
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        s.std = 0.0;
        return s;
    }
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(acc / (n - 1.0));
    return s;
}

AggregateReport aggregate(const std::vector<EvalReport>& reports) {
    if (reports.empty()) {
        throw DataError("aggregate: no reports");
    }
    std::vector<double> aurocs, fprs;
    aurocs.reserve(reports.size());
    fprs.reserve(reports.size());
    for (const EvalReport& r : reports) {
        aurocs.push_back(r.auroc);
        fprs.push_back(r.fpr_at_95tpr);
    }
    return AggregateReport{mean_std(aurocs), mean_std(fprs)};
}

} // namespace hod
