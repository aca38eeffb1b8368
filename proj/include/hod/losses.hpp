#pragma once

#include <span>
#include <vector>

#include "hod/classifier.hpp"
#include "hod/lorentz.hpp"

namespace hod {

/**
 * Batch of embedded points with class labels. view_of optionally records
 * which source sample each entry is a view of; the loss itself defines
 * positives purely by label, the pairing is bookkeeping for callers.
 */
struct ContrastiveBatch {
    std::vector<LorentzPoint> points;
    std::vector<int> labels;
    std::vector<int> view_of;
};

/// Throws InvalidBatchError unless sizes agree, the batch has >= 2 entries
/// and every anchor has at least one positive.
void validate_contrastive_batch(const ContrastiveBatch& batch);

/**
 * Supervised contrastive loss over the hyperboloid. Similarity between two
 * embeddings is the negative geodesic distance scaled by 1/tau; every batch
 * entry acts as an anchor, its positives are the other entries sharing its
 * label, and each anchor's log-sum-exp runs over all other entries with
 * max-subtraction. Returns the sum over anchors (not the mean).
 */
double hsup_loss(const ContrastiveBatch& batch, double tau, Curvature c);

struct HsupGrad {
    double value = 0.0;
    std::vector<Vec> space;      // per point, w.r.t. its space coordinates
    double curvature = 0.0;      // w.r.t. c with space coordinates held fixed
    double curvature_param = 0.0; // chained through c = softplus(rho)
};

/// Reverse-mode gradients of hsup_loss. Pairs whose acosh argument sits at
/// the clamp (coincident points) contribute zero gradient.
HsupGrad hsup_loss_grad(const ContrastiveBatch& batch, double tau, double curvature_param);

/**
 * Binary uncertainty objective: mean over outliers of softplus(+logit) plus
 * mean over ID embeddings of softplus(-logit), pushing outliers to the
 * negative side of the plane (towards the origin) and ID points to the
 * positive side.
 */
double uncertainty_loss(std::span<const LorentzPoint> id_points,
                        std::span<const LorentzPoint> outliers, const Hyperplane& plane,
                        Curvature c);

// Outliers are stop-gradient constants: they contribute no point gradient,
// and the curvature gradient holds their ambient coordinates fixed. ID
// embeddings are parametrized by their space coordinates with time following
// the manifold reconstruction.
struct UncertaintyGrad {
    double value = 0.0;
    std::vector<Vec> id_space;
    HyperplaneGrad plane;
    double curvature = 0.0;
    double curvature_param = 0.0;
};

UncertaintyGrad uncertainty_loss_grad(std::span<const LorentzPoint> id_points,
                                      std::span<const LorentzPoint> outliers,
                                      const Hyperplane& plane, double curvature_param);

/// contrastive + alpha * uncertainty, alpha >= 0.
double total_loss(double contrastive, double uncertainty, double alpha);

} // namespace hod
