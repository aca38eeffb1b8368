#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "hod/bank.hpp"
#include "hod/checkpoint.hpp"
#include "hod/data.hpp"
#include "hod/head.hpp"

namespace hod {

/// Linear warmup to lr_max over warmup_iters, then cosine decay to zero at
/// the final iteration.
double lr_schedule(Eigen::Index iter, const TrainConfig& cfg);

/// First and second moment buffers for the head and the binary plane.
struct OptimizerState {
    ParamGrad m;
    ParamGrad v;
    HyperplaneGrad plane_m;
    HyperplaneGrad plane_v;
    long long step = 0;
};

OptimizerState make_optimizer(const HeadParams& params, Eigen::Index plane_dim);

/**
 * One Adam step with decoupled weight decay. The decay multiplies the layer
 * weight matrices only; biases, the curvature parameter and hyperplane
 * parameters are never decayed. With update_head false the head tensors and
 * their moments are left untouched while the plane still updates.
 */
void adamw_step(HeadParams& params, Hyperplane& plane, const ParamGrad& grad,
                const HyperplaneGrad& plane_grad, OptimizerState& state, double lr,
                const TrainConfig& cfg, bool update_head = true);

struct HistoryRow {
    Eigen::Index iteration = 0;
    double loss = 0.0;
    double contrastive = 0.0;
    double uncertainty = 0.0;
    double lr = 0.0;
    /// Mean geodesic distance from the origin over the batch embeddings.
    double mean_origin_distance = 0.0;
    Eigen::Index n_outliers = 0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<HistoryRow> history;
    /// Batches rejected because some anchor had no positive (single-view
    /// mode only; the paired-view batches always qualify).
    Eigen::Index skipped_batches = 0;
    /// Mean space norms at the last iteration that synthesized outliers;
    /// NaN when none did.
    double final_id_mean_norm = std::numeric_limits<double>::quiet_NaN();
    double final_outlier_mean_norm = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index last_outlier_iteration = -1;
};

/// The starting parameters train() uses for this config and input width:
/// head weights, c = 1 and a random binary plane, no class planes yet.
Checkpoint init_model(const TrainConfig& cfg, Eigen::Index feature_dim);

/**
 * Full training loop: epoch-shuffled batches, the configured views, the
 * contrastive objective plus (once outlier synthesis kicks in) alpha times
 * the uncertainty objective, AdamW with the warmup-cosine schedule. Progress
 * warnings go to log when given. Deterministic for a fixed config and input.
 */
TrainResult train(const FeatureBank& train_bank, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

/// Runs every row through the head and lifts it onto the manifold.
EmbeddingBank embed_bank(const Checkpoint& ckpt, const FeatureBank& bank);

/**
 * Fits one hyperplane per class by softmax cross-entropy over the frozen
 * head, enabling the logit-based scores. Plain Adam at classifier_lr for
 * classifier_iters steps; a no-op when classifier_iters is zero.
 */
void fit_classifier(Checkpoint& ckpt, const FeatureBank& bank, const TrainConfig& cfg,
                    std::ostream* log = nullptr);

/// Tab-separated history dump, one row per logged iteration.
void write_history(const std::vector<HistoryRow>& history, const std::string& path);

} // namespace hod
