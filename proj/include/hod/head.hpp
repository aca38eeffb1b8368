#pragma once

#include <vector>

#include "hod/losses.hpp"
#include "hod/rng.hpp"

namespace hod {

struct AffineLayer {
    Mat weight;
    Vec bias;
};

/**
 * Projection head: affine layers with max(0, x) between them, mapping
 * feature vectors of length e to embedding coordinates of length n, plus the
 * unconstrained curvature parameter. The embedding itself is obtained by
 * lifting the head output onto the hyperboloid, see lift().
 */
struct HeadParams {
    std::vector<AffineLayer> layers;
    double curvature_param = 0.0;

    Eigen::Index feature_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
    Eigen::Index embed_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
    Curvature curvature() const { return curvature_from_param(curvature_param); }

    /// Two affine layers e -> hidden -> n, He-scaled Gaussian weights for
    /// the hidden layer, 0.01/sqrt(fan-in) for the output layer (fresh
    /// embeddings start near the origin), zero biases, curvature parameter
    /// set so that c = 1.
    static HeadParams init(Eigen::Index feature_dim, Eigen::Index embed_dim,
                           Eigen::Index hidden_dim, Rng& rng);
};

/// Same shapes as HeadParams, holding partial derivatives.
struct ParamGrad {
    std::vector<AffineLayer> layers;
    double curvature_param = 0.0;

    static ParamGrad zeros_like(const HeadParams& p);
};

Vec head_forward(const HeadParams& p, const Eigen::Ref<const Vec>& feature);

/// Rows are samples.
Mat head_forward_batch(const HeadParams& p, const Eigen::Ref<const Mat>& features);

/**
 * Space-component lift onto the hyperboloid:
 * space = sinh(sqrt(c)|u|) / (sqrt(c)|u|) * u, time reconstructed. Equals
 * expmap at the origin of the tangent vector (0, u). The argument
 * sqrt(c)|u| is clamped at 175 so downstream inner products stay finite.
 */
LorentzPoint lift(const Eigen::Ref<const Vec>& u, Curvature c);

enum class LossKind { contrastive, contrastive_uncertainty, cross_entropy };

struct HeadBatch {
    Mat features; // rows are samples
    std::vector<int> labels;
};

struct HeadLossSettings {
    LossKind kind = LossKind::contrastive;
    double tau = 0.1;
    double alpha = 0.1;
    // contrastive_uncertainty: the binary plane and the synthetic outliers
    // (treated as constants during backward).
    const Hyperplane* binary_plane = nullptr;
    const std::vector<LorentzPoint>* outliers = nullptr;
    // cross_entropy: one plane per class.
    const ClassifierParams* classifier = nullptr;
};

struct HeadBackward {
    double loss = 0.0;
    double contrastive = 0.0;  // cross-entropy value in cross_entropy mode
    double uncertainty = 0.0;
    ParamGrad grad;
    HyperplaneGrad binary_plane;
    std::vector<HyperplaneGrad> classifier;
    std::vector<LorentzPoint> embeddings;
};

/// Forward-only evaluation of the configured loss; used by gradient checks.
double head_loss(const HeadParams& p, const HeadBatch& batch, const HeadLossSettings& s);

/// Loss plus gradients w.r.t. every head parameter, the curvature parameter
/// and (depending on the loss kind) the hyperplane parameters.
HeadBackward head_backward(const HeadParams& p, const HeadBatch& batch,
                           const HeadLossSettings& s);

} // namespace hod
