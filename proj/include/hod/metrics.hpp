#pragma once

#include <vector>

#include <Eigen/Core>

#include "hod/errors.hpp"

namespace hod {

/**
 * Detection scores for one evaluation, under the shared convention that a
 * higher score means more in-distribution.
 */
struct ScoreSet {
    std::vector<double> id_scores;
    std::vector<double> ood_scores;
};

/**
 * Probability that a random ID score beats a random OOD score, ties counted
 * half. Computed from midranks, which gives exactly the pairwise count.
 */
double auroc(const ScoreSet& scores);

/**
 * False positive rate at the given true positive rate. The threshold is the
 * largest value that still covers at least ceil(tpr * n_id) ID scores, and
 * both sides use an inclusive >= comparison.
 */
double fpr_at_tpr(const ScoreSet& scores, double tpr = 0.95);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    /// Both variances zero with unequal means; p is reported as 0.
    bool degenerate = false;
};

/// Two-sample t-test with unequal variances and Welch-Satterthwaite df.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/**
 * Regularized incomplete beta I_x(a, b), evaluated by adaptive quadrature of
 * the normalized integrand to absolute error well under 1e-8. A substitution
 * flattens the endpoint singularity when a < 1, and the reflection
 * I_x(a,b) = 1 - I_{1-x}(b,a) keeps the integration away from u = 1.
 */
double regularized_incomplete_beta(double x, double a, double b);

/// P(|T| > |t|) for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct Summary {
    double mean = 0.0;
    double std = 0.0;
};

/// Sample mean and standard deviation (n-1 denominator, 0 for a single value).
Summary mean_std(const std::vector<double>& values);

/// Metrics of a single evaluation run.
struct EvalReport {
    double auroc = 0.0;
    double fpr_at_95tpr = 0.0;
    Eigen::Index chosen_k = 0;
};

struct AggregateReport {
    Summary auroc;
    Summary fpr_at_95tpr;
};

/// Mean and std of each metric across runs (typically one run per seed).
AggregateReport aggregate(const std::vector<EvalReport>& reports);

} // namespace hod
