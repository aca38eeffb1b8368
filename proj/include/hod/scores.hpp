#pragma once

#include <span>
#include <vector>

#include "hod/bank.hpp"
#include "hod/metrics.hpp"

namespace hod {

/**
 * Negative geodesic distance to the k-th nearest bank point. A query sitting
 * on a bank point scores 0 at k = 1, everything else scores below.
 */
double knn_score(const EmbeddingBank& bank, const LorentzPoint& query, Eigen::Index k);

/// knn_score for every query in order.
std::vector<double> knn_scores(const EmbeddingBank& bank, std::span<const LorentzPoint> queries,
                               Eigen::Index k);

/// Negative energy T * log sum_k exp(logit_k / T), with max subtraction.
double ebo_score(const Eigen::Ref<const Vec>& logits, double temperature);

/// Largest softmax probability of the logit vector.
double softmax_score(const Eigen::Ref<const Vec>& logits);

/// Geodesic distance from the origin; grows as the embedding gains certainty.
double origin_distance_score(const LorentzPoint& z, Curvature c);

enum class Decision { kId, kOod };

/// Level-set rule: ID iff score >= lambda (boundary counts as ID).
Decision decide(double score, double lambda);

/// {1, 5, 10, 25, 50, 100} clipped to [1, bank_size].
std::vector<Eigen::Index> default_k_grid(Eigen::Index bank_size);

/**
 * Neighbour count from the grid that maximizes validation AUROC of the knn
 * score; ties go to the smallest k.
 */
Eigen::Index tune_k(const EmbeddingBank& bank, std::span<const LorentzPoint> val_id,
                    std::span<const LorentzPoint> val_ood, std::span<const Eigen::Index> grid);

struct KSweepEntry {
    Eigen::Index k = 0;
    double auroc = 0.0;
};

/// Validation AUROC for every k in the grid, in grid order.
std::vector<KSweepEntry> sweep_k(const EmbeddingBank& bank, std::span<const LorentzPoint> val_id,
                                 std::span<const LorentzPoint> val_ood,
                                 std::span<const Eigen::Index> grid);

} // namespace hod
