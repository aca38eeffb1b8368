#pragma once

#include <vector>

#include "hod/lorentz.hpp"
#include "hod/rng.hpp"

namespace hod {

/**
 * Decision hyperplane in the Lorentz model, parametrized by a geodesic
 * offset a and an orientation vector o (one entry per space coordinate).
 * The ambient normal is
 *
 *   w = (sinh(a sqrt(c)) |o|,  cosh(a sqrt(c)) o)
 *
 * which satisfies <w,w>_L = |o|^2 regardless of a and c. Along the geodesic
 * through the origin in direction o/|o| the induced logit is exactly
 * |o| * (t - a), so a is where the plane cuts that geodesic.
 */
struct Hyperplane {
    double offset = 0.0;
    Vec orientation;
};

/// One hyperplane per class, all sharing the embedding dimension.
struct ClassifierParams {
    std::vector<Hyperplane> planes;

    Eigen::Index dim() const { return planes.empty() ? 0 : planes.front().orientation.size(); }
    int n_classes() const { return static_cast<int>(planes.size()); }
};

/// Gradient of a scalar objective with respect to one hyperplane.
struct HyperplaneGrad {
    double offset = 0.0;
    Vec orientation;
};

/// Ambient normal vector w described above. Throws on |o| = 0.
Vec hyperplane_normal(const Hyperplane& h, Curvature c);

/// <w, z>_L, the raw (unsquashed) margin of z against the plane.
double hyperplane_margin(const LorentzPoint& z, const Hyperplane& h, Curvature c);

/// Geodesic distance from z to the plane:
/// (1/sqrt(c)) asinh(sqrt(c) |<w,z>_L| / |o|).
double hyperplane_distance(const LorentzPoint& z, const Hyperplane& h, Curvature c);

/// Signed logit (|o|/sqrt(c)) asinh(sqrt(c) <w,z>_L / |o|); smooth in z and
/// equal in magnitude to |o| times the distance.
double hyperplane_logit(const LorentzPoint& z, const Hyperplane& h, Curvature c);

/// Logits of z against every class plane.
Vec class_logits(const LorentzPoint& z, const ClassifierParams& params, Curvature c);

/// Zero offset, orientation drawn uniformly from the unit sphere.
Hyperplane random_hyperplane(Eigen::Index n, Rng& rng);

/**
 * Logit together with its partial derivatives. d_space and d_curvature
 * treat the point as a function of its space coordinates with the time
 * coordinate following the manifold reconstruction sqrt(1/c + |space|^2);
 * d_curvature_ambient instead holds the full ambient coordinate vector
 * fixed, which is the right notion for points excluded from the gradient
 * (synthetic outliers).
 */
struct LogitPullback {
    double logit = 0.0;
    Vec d_space;
    double d_offset = 0.0;
    Vec d_orientation;
    double d_curvature = 0.0;
    double d_curvature_ambient = 0.0;
};

LogitPullback logit_pullback(const LorentzPoint& z, const Hyperplane& h, Curvature c);

} // namespace hod
