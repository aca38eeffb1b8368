#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hod/bank.hpp"
#include "hod/lorentz.hpp"
#include "hod/rng.hpp"

namespace hod {

/**
 * Knobs for synthetic outlier generation: how many low-norm embeddings to use
 * as seeds, how widely to scatter candidates around them, and how many of the
 * surviving candidates to keep per seed.
 */
struct OutlierConfig {
    double sigma = 0.01;
    /// 0 means automatic: max(1, batch_size / 10).
    Eigen::Index seeds_per_batch = 0;
    Eigen::Index candidates_per_seed = 20;
    Eigen::Index keep_per_seed = 5;
    /// Training iteration at which synthesis starts contributing.
    std::int64_t start_iteration = 1000;

    void validate() const;

    /// Seed count resolved against a concrete batch size (clamped to it).
    Eigen::Index seed_count(Eigen::Index batch_size) const;
};

/// Raw candidates plus which seed each one was sampled around.
struct CandidateSet {
    std::vector<LorentzPoint> candidates;
    std::vector<Eigen::Index> seed_index;
};

/// Accepted outliers; seed_index maps each one back to its seed embedding.
struct SynthesizedSet {
    std::vector<LorentzPoint> outliers;
    std::vector<Eigen::Index> seed_index;
};

/**
 * Wrapped Gaussian draw centred at mu: sample N(0, sigma^2 I) in the tangent
 * space at the origin, parallel transport to mu, apply expmap. sigma = 0
 * returns mu exactly (the rng is still advanced, so streams stay aligned
 * across sigma values).
 */
LorentzPoint wrapped_gaussian_sample(const LorentzPoint& mu, double sigma, Curvature c, Rng& rng);

/**
 * Indices of the `count` points with the smallest space norms, ties broken
 * toward the lower index. Low norm means close to the origin, which the
 * training loss treats as the uncertain region.
 */
std::vector<Eigen::Index> select_uncertain(std::span<const LorentzPoint> points,
                                           Eigen::Index count);
std::vector<Eigen::Index> select_uncertain(const EmbeddingBank& bank, Eigen::Index count);

/**
 * candidates_per_seed wrapped-Gaussian draws around every seed. Seed i uses
 * the child stream rng.stream(i), so per-seed generation is order-independent
 * and could run concurrently; candidates are emitted grouped in seed order.
 */
CandidateSet synthesize(std::span<const LorentzPoint> seeds, const OutlierConfig& cfg,
                        Curvature c, const Rng& rng);

/**
 * Acceptance filter. Per seed z: discard candidates whose space displacement
 * from z is >= the space norm of z, then keep the keep_per_seed survivors
 * with the largest space norms (descending, ties by candidate order). A seed
 * may contribute fewer than keep_per_seed outliers, or none.
 */
SynthesizedSet filter_outliers(const CandidateSet& cands, std::span<const LorentzPoint> seeds,
                               const OutlierConfig& cfg);

/**
 * Whole pipeline: select uncertain seeds from `points`, sample candidates,
 * filter. The returned seed_index values refer to positions in `points`.
 */
SynthesizedSet synthesize_outliers(std::span<const LorentzPoint> points, const OutlierConfig& cfg,
                                   Curvature c, const Rng& rng);

} // namespace hod
