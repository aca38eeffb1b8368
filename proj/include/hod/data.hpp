#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hod/lorentz.hpp"
#include "hod/outliers.hpp"

namespace hod {

/// Labelled feature rows, the unit of exchange on disk and into training.
struct FeatureBank {
    Mat features; // rows are samples
    std::vector<int> labels;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

/**
 * Reads either format: binary (sniffed by the "HODF" magic) or CSV with a
 * "label,dim=<e>" header and one "label,f1,...,fe" row per line.
 */
FeatureBank read_feature_file(const std::string& path);

/// Binary only; rejects files whose magic is not "HODF".
FeatureBank read_feature_file_binary(const std::string& path);

FeatureBank read_feature_file_csv(const std::string& path);

/// Writes CSV when the path ends in ".csv", the binary format otherwise.
void write_feature_file(const FeatureBank& bank, const std::string& path);

/**
 * Binary layout, little-endian: magic "HODF", version u32 (currently 1),
 * feature dim u32, row count u64, then per row a label i32 and dim f64s.
 */
void write_feature_file_binary(const FeatureBank& bank, const std::string& path);

void write_feature_file_csv(const FeatureBank& bank, const std::string& path);

enum class OodMode { shifted_cluster, uniform_shell };

/**
 * Generator for a desk-scale labelled dataset: Gaussian class clusters whose
 * means sit on a sphere of radius mean_radius, plus an OOD set that is either
 * a single cluster shifted to three times that radius (near regime) or a
 * uniform draw from the shell at three times that radius (far regime).
 */
struct SynthDataConfig {
    int n_classes = 4;
    Eigen::Index dim = 32;
    Eigen::Index per_class = 500;
    double mean_radius = 5.0;
    double within_std = 1.0;
    OodMode ood_mode = OodMode::shifted_cluster;
    /// Rows generated for each of the two OOD splits.
    Eigen::Index ood_count = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The five banks a full experiment needs. ID rows are split 70/15/15 per
/// class; OOD rows carry the placeholder label 0.
struct SynthData {
    FeatureBank train_id;
    FeatureBank val_id;
    FeatureBank val_ood;
    FeatureBank test_id;
    FeatureBank test_ood;
};

SynthData gen_synthetic(const SynthDataConfig& cfg);

/// File names used inside a dataset directory.
namespace files {
inline constexpr const char* kTrainId = "train_id.hodf";
inline constexpr const char* kValId = "val_id.hodf";
inline constexpr const char* kValOod = "val_ood.hodf";
inline constexpr const char* kTestId = "test_id.hodf";
inline constexpr const char* kTestOod = "test_ood.hodf";
} // namespace files

void write_dataset(const SynthData& data, const std::string& dir);
SynthData read_dataset(const std::string& dir);

enum class ViewMode { two_view_jitter, single_view };

/**
 * Training hyperparameters. The iteration and batch defaults are sized for a
 * desk run; the reference settings for full-scale feature banks are 20000
 * iterations at batch 256 with everything else unchanged.
 */
struct TrainConfig {
    Eigen::Index iterations = 2000;
    Eigen::Index batch_size = 64;
    double lr_max = 1e-3;
    Eigen::Index warmup_iters = 400;
    double weight_decay = 0.2;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-8;
    double tau = 0.1;
    /// Weight of the uncertainty term; 0 disables outlier synthesis.
    double alpha = 0.1;
    OutlierConfig outliers;
    std::uint64_t seed = 0;
    ViewMode view_mode = ViewMode::two_view_jitter;
    /// Jitter std as a multiple of the per-feature std of the training set.
    double jitter_scale = 0.01;
    Eigen::Index embed_dim = 128;
    /// 0 means twice embed_dim.
    Eigen::Index hidden_dim = 0;
    /// Head parameters stop updating from this iteration on; -1 disables.
    Eigen::Index freeze_head_after = -1;
    /// Optional post-training fit of per-class hyperplanes on the frozen
    /// head, enabling the logit-based scores. 0 skips it.
    Eigen::Index classifier_iters = 0;
    double classifier_lr = 1e-2;

    void validate() const;

    Eigen::Index resolved_hidden_dim() const {
        return hidden_dim > 0 ? hidden_dim : 2 * embed_dim;
    }
};

struct Config {
    TrainConfig train;
    SynthDataConfig data;
};

/**
 * Flat key=value text, one pair per line, '#' starts a comment. Unknown keys
 * are an error listing every offender; later lines override earlier ones.
 * Overrides take the same "key=value" form and win over the file. An empty
 * path yields the defaults. The result is validated before it is returned.
 */
Config parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Apply one "key=value" assignment; the same keys the file format accepts.
void apply_override(Config& cfg, const std::string& assignment);

} // namespace hod
