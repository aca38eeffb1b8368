#include "hod/scores.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hod {

double knn_score(const EmbeddingBank& bank, const LorentzPoint& query, Eigen::Index k) {
    if (k < 1 || k > bank.size()) {
        throw ConfigError("knn_score: k " + std::to_string(k) + " out of range [1, " +
                          std::to_string(bank.size()) + "]");
    }
    if (query.dim() != bank.dim()) {
        throw DimensionError("knn_score: query dimension " + std::to_string(query.dim()) +
                             " does not match bank dimension " + std::to_string(bank.dim()));
    }
    std::vector<double> dist;
    dist.reserve(bank.points().size());
    for (const LorentzPoint& p : bank.points()) {
        dist.push_back(lorentz_distance(query, p, bank.curvature()));
    }
    auto kth = dist.begin() + (k - 1);
    std::nth_element(dist.begin(), kth, dist.end());
    return -*kth;
}

std::vector<double> knn_scores(const EmbeddingBank& bank, std::span<const LorentzPoint> queries,
                               Eigen::Index k) {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const LorentzPoint& q : queries) {
        out.push_back(knn_score(bank, q, k));
    }
    return out;
}

double ebo_score(const Eigen::Ref<const Vec>& logits, double temperature) {
    if (logits.size() < 1) {
        throw DimensionError("ebo_score: empty logit vector");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ConfigError("ebo_score: temperature must be positive finite");
    }
    const double m = logits.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        sum += std::exp((logits[i] - m) / temperature);
    }
    return m + temperature * std::log(sum);
}

double softmax_score(const Eigen::Ref<const Vec>& logits) {
    if (logits.size() < 1) {
        throw DimensionError("softmax_score: empty logit vector");
    }
    const double m = logits.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        sum += std::exp(logits[i] - m);
    }
    return 1.0 / sum; // exp(m - m) / sum
}

double origin_distance_score(const LorentzPoint& z, Curvature c) {
    return lorentz_distance(z, LorentzPoint::origin(z.dim(), c), c);
}

Decision decide(double score, double lambda) {
    if (std::isnan(score) || std::isnan(lambda)) {
        throw NumericError("decide: score and threshold must not be NaN");
    }
    return score >= lambda ? Decision::kId : Decision::kOod;
}

std::vector<Eigen::Index> default_k_grid(Eigen::Index bank_size) {
    std::vector<Eigen::Index> grid;
    for (Eigen::Index k : {1, 5, 10, 25, 50, 100}) {
        if (k >= 1 && k <= bank_size) grid.push_back(k);
    }
    return grid;
}

Eigen::Index tune_k(const EmbeddingBank& bank, std::span<const LorentzPoint> val_id,
                    std::span<const LorentzPoint> val_ood, std::span<const Eigen::Index> grid) {
    std::vector<KSweepEntry> table = sweep_k(bank, val_id, val_ood, grid);
    KSweepEntry best = table.front();
    for (const KSweepEntry& e : table) {
        if (e.auroc > best.auroc || (e.auroc == best.auroc && e.k < best.k)) {
            best = e;
        }
    }
    return best.k;
}

std::vector<KSweepEntry> sweep_k(const EmbeddingBank& bank, std::span<const LorentzPoint> val_id,
                                 std::span<const LorentzPoint> val_ood,
                                 std::span<const Eigen::Index> grid) {
    if (grid.empty()) {
        throw ConfigError("k grid is empty");
    }
    std::vector<KSweepEntry> out;
    out.reserve(grid.size());
    for (Eigen::Index k : grid) {
        ScoreSet s;
        s.id_scores = knn_scores(bank, val_id, k);
        s.ood_scores = knn_scores(bank, val_ood, k);
        out.push_back({k, auroc(s)});
    }
    return out;
}

} // namespace hod
