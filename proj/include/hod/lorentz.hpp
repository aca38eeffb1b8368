#pragma once

#include <Eigen/Dense>

#include "hod/errors.hpp"

namespace hod {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/**
 * Curvature of the hyperbolic space, i.e. the c in a manifold of constant
 * sectional curvature -c. Must be positive and finite.
 */
class Curvature {
public:
    explicit Curvature(double c);

    double value() const { return c_; }
    double sqrt() const { return sqrt_c_; }

private:
    double c_;
    double sqrt_c_;
};

/**
 * Point on the upper sheet of the hyperboloid {z : c<z,z>_L = -1, z_t > 0},
 * stored as an ambient vector with the time coordinate at index 0 and the n
 * space coordinates after it.
 *
 * Every constructor rebuilds the time coordinate from the space coordinates,
 * so a LorentzPoint is on the manifold by construction up to floating point
 * rounding in the reconstruction itself.
 */
class LorentzPoint {
public:
    /// Lifts space coordinates onto the sheet: time = sqrt(1/c + |space|^2).
    static LorentzPoint from_space(const Eigen::Ref<const Vec>& space, Curvature c);

    /// The point (1/sqrt(c), 0, ..., 0) with n space coordinates.
    static LorentzPoint origin(Eigen::Index n, Curvature c);

    /// Wraps ambient coordinates, recomputing time from the space part.
    static LorentzPoint from_ambient(const Eigen::Ref<const Vec>& coords, Curvature c);

    /// Manifold dimension n (the ambient vector has n+1 entries).
    Eigen::Index dim() const { return coords_.size() - 1; }

    double time() const { return coords_[0]; }

    Eigen::Ref<const Vec> space() const { return coords_.tail(coords_.size() - 1); }

    const Vec& coords() const { return coords_; }

private:
    explicit LorentzPoint(Vec coords) : coords_(std::move(coords)) {}

    Vec coords_;
};

/**
 * Element of the tangent space at a base point, stored in ambient
 * coordinates. Construction checks Lorentz orthogonality to the base.
 */
class TangentVector {
public:
    TangentVector(LorentzPoint base, Vec components);

    const LorentzPoint& base() const { return base_; }
    const Vec& components() const { return components_; }

private:
    LorentzPoint base_;
    Vec components_;
};

/// <x, y>_L = <x_space, y_space> - x_time * y_time.
double lorentz_inner(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);

/// sinh(t)/t, switching to the Taylor series 1 + t^2/6 + t^4/120 near zero.
double sinh_over_x(double t);

/// Geodesic distance acosh(-c <x,y>_L) / sqrt(c). The acosh argument is
/// clamped from below to 1 so that rounding can never produce a NaN.
double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y, Curvature c);

/// Orthogonal projection of an ambient vector onto the tangent space at z:
/// v = u + c * z * <z, u>_L.
TangentVector tangent_project(const LorentzPoint& z, const Eigen::Ref<const Vec>& u, Curvature c);

/// Riemannian norm sqrt(max(0, <v,v>_L)) of a tangent vector.
double tangent_norm(const TangentVector& v);

/// Exponential map. exp_z(0) returns z exactly.
LorentzPoint expmap(const LorentzPoint& z, const TangentVector& v, Curvature c);

/// Inverse of expmap: the tangent vector at z that reaches x, with
/// |log_z(x)| equal to the geodesic distance.
TangentVector logmap(const LorentzPoint& z, const LorentzPoint& x, Curvature c);

/// Parallel transport of v from the tangent space at src to the one at dst
/// along the connecting geodesic.
TangentVector parallel_transport(const LorentzPoint& src, const LorentzPoint& dst,
                                 const TangentVector& v, Curvature c);

/// |c <z,z>_L + 1|, useful for checking how far off the sheet a point is.
double manifold_violation(const LorentzPoint& z, Curvature c);

/// Numerically stable log(1 + exp(x)).
double softplus(double x);

/// Curvature from its unconstrained parameter: c = max(softplus(rho), 1e-12).
/// The floor keeps Curvature construction valid even for rho -> -inf.
Curvature curvature_from_param(double rho);

/// Inverse of curvature_from_param on its smooth range, log(exp(c) - 1).
double curvature_param_from(double c);

/// dc/drho = sigmoid(rho), or 0 where the floor is active.
double curvature_param_chain(double rho);

namespace detail {
// Largest allowed sqrt(c) * |u| when lifting tangent coordinates, see lift().
// cosh(175)^2 is about 6e151, which keeps every downstream inner product
// finite in double precision.
inline constexpr double kMaxLiftArg = 175.0;
} // namespace detail

} // namespace hod
