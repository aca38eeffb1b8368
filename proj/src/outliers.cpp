#include "hod/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace hod {

void OutlierConfig::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("sigma must be a positive finite real");
    }
    if (seeds_per_batch < 0) {
        throw ConfigError("seeds_per_batch must be >= 1, or 0 for automatic");
    }
    if (candidates_per_seed < 1) {
        throw ConfigError("candidates_per_seed must be >= 1");
    }
    if (keep_per_seed < 1) {
        throw ConfigError("keep_per_seed must be >= 1");
    }
    if (keep_per_seed > candidates_per_seed) {
        throw ConfigError("keep_per_seed must not exceed candidates_per_seed");
    }
    if (start_iteration < 0) {
        throw ConfigError("start_iteration must be >= 0");
    }
}

Eigen::Index OutlierConfig::seed_count(Eigen::Index batch_size) const {
    if (batch_size < 1) return 0;
    Eigen::Index n = seeds_per_batch > 0 ? seeds_per_batch : std::max<Eigen::Index>(1, batch_size / 10);
    return std::min(n, batch_size);
}

LorentzPoint wrapped_gaussian_sample(const LorentzPoint& mu, double sigma, Curvature c, Rng& rng) {
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw ConfigError("wrapped_gaussian_sample: sigma must be finite and >= 0");
    }
    const Eigen::Index n = mu.dim();
    Vec draw = Vec::Zero(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        draw[i + 1] = sigma * rng.normal();
    }
    LorentzPoint o = LorentzPoint::origin(n, c);
    TangentVector at_origin(o, std::move(draw));
    TangentVector at_mu = parallel_transport(o, mu, at_origin, c);
    return expmap(mu, at_mu, c);
}

std::vector<Eigen::Index> select_uncertain(std::span<const LorentzPoint> points,
                                           Eigen::Index count) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (count < 1 || count > n) {
        throw ConfigError("select_uncertain: count " + std::to_string(count) +
                          " out of range [1, " + std::to_string(n) + "]");
    }
    std::vector<double> norm(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        norm[i] = points[i].space().norm();
    }
    std::vector<Eigen::Index> idx(points.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (norm[a] != norm[b]) return norm[a] < norm[b];
        return a < b;
    });
    idx.resize(count);
    return idx;
}

std::vector<Eigen::Index> select_uncertain(const EmbeddingBank& bank, Eigen::Index count) {
    return select_uncertain(std::span<const LorentzPoint>(bank.points()), count);
}

CandidateSet synthesize(std::span<const LorentzPoint> seeds, const OutlierConfig& cfg,
                        Curvature c, const Rng& rng) {
    cfg.validate();
    if (seeds.empty()) {
        throw InvalidBatchError("synthesize: seed set is empty");
    }
    CandidateSet out;
    out.candidates.reserve(seeds.size() * cfg.candidates_per_seed);
    out.seed_index.reserve(seeds.size() * cfg.candidates_per_seed);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        Rng sub = rng.stream(i);
        for (Eigen::Index j = 0; j < cfg.candidates_per_seed; ++j) {
            out.candidates.push_back(wrapped_gaussian_sample(seeds[i], cfg.sigma, c, sub));
            out.seed_index.push_back(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

SynthesizedSet filter_outliers(const CandidateSet& cands, std::span<const LorentzPoint> seeds,
                               const OutlierConfig& cfg) {
    cfg.validate();
    if (cands.candidates.size() != cands.seed_index.size()) {
        throw DataError("filter_outliers: candidate and seed_index lengths differ");
    }
    std::vector<std::vector<std::size_t>> by_seed(seeds.size());
    for (std::size_t j = 0; j < cands.candidates.size(); ++j) {
        const Eigen::Index s = cands.seed_index[j];
        if (s < 0 || s >= static_cast<Eigen::Index>(seeds.size())) {
            throw DataError("filter_outliers: seed index " + std::to_string(s) +
                            " out of range");
        }
        by_seed[s].push_back(j);
    }

    SynthesizedSet v;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const double seed_norm = seeds[i].space().norm();
        // (candidate space norm, candidate position); position doubles as the
        // tie break so equal norms keep candidate order.
        std::vector<std::pair<double, std::size_t>> survivors;
        for (std::size_t j : by_seed[i]) {
            const double displacement = (cands.candidates[j].space() - seeds[i].space()).norm();
            if (displacement < seed_norm) {
                survivors.emplace_back(cands.candidates[j].space().norm(), j);
            }
        }
        std::sort(survivors.begin(), survivors.end(),
                  [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                  });
        const auto take = std::min<std::size_t>(survivors.size(),
                                                static_cast<std::size_t>(cfg.keep_per_seed));
        for (std::size_t t = 0; t < take; ++t) {
            v.outliers.push_back(cands.candidates[survivors[t].second]);
            v.seed_index.push_back(static_cast<Eigen::Index>(i));
        }
    }
    return v;
}

SynthesizedSet synthesize_outliers(std::span<const LorentzPoint> points, const OutlierConfig& cfg,
                                   Curvature c, const Rng& rng) {
    cfg.validate();
    if (points.empty()) {
        throw InvalidBatchError("synthesize_outliers: point set is empty");
    }
    const Eigen::Index count = cfg.seed_count(static_cast<Eigen::Index>(points.size()));
    std::vector<Eigen::Index> picked = select_uncertain(points, count);
    std::vector<LorentzPoint> seeds;
    seeds.reserve(picked.size());
    for (Eigen::Index i : picked) {
        seeds.push_back(points[static_cast<std::size_t>(i)]);
    }
    CandidateSet cands = synthesize(seeds, cfg, c, rng);
    SynthesizedSet v = filter_outliers(cands, seeds, cfg);
    for (Eigen::Index& s : v.seed_index) {
        s = picked[static_cast<std::size_t>(s)];
    }
    return v;
}

} // namespace hod
