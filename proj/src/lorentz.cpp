#include "hod/lorentz.hpp"

#include <cmath>

namespace hod {

Curvature::Curvature(double c) : c_(c), sqrt_c_(std::sqrt(c)) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw NumericError("curvature must be positive and finite, got " + std::to_string(c));
    }
}

LorentzPoint LorentzPoint::from_space(const Eigen::Ref<const Vec>& space, Curvature c) {
    if (space.size() < 1) {
        throw DimensionError("a Lorentz point needs at least one space coordinate");
    }
    Vec coords(space.size() + 1);
    coords[0] = std::sqrt(1.0 / c.value() + space.squaredNorm());
    coords.tail(space.size()) = space;
    return LorentzPoint(std::move(coords));
}

LorentzPoint LorentzPoint::origin(Eigen::Index n, Curvature c) {
    return from_space(Vec::Zero(n), c);
}

LorentzPoint LorentzPoint::from_ambient(const Eigen::Ref<const Vec>& coords, Curvature c) {
    if (coords.size() < 2) {
        throw DimensionError("ambient coordinates need at least two entries");
    }
    return from_space(coords.tail(coords.size() - 1), c);
}

TangentVector::TangentVector(LorentzPoint base, Vec components)
    : base_(std::move(base)), components_(std::move(components)) {
    if (components_.size() != base_.coords().size()) {
        throw DimensionError("tangent vector has " + std::to_string(components_.size()) +
                             " components but the base point has " +
                             std::to_string(base_.coords().size()));
    }
    double ip = lorentz_inner(base_.coords(), components_);
    double scale = std::max(1.0, base_.coords().norm() * components_.norm());
    if (std::abs(ip) > 1e-8 * scale) {
        throw NumericError("vector is not tangent at the base point, <z,v>_L = " +
                           std::to_string(ip));
    }
}

double lorentz_inner(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y) {
    if (x.size() != y.size()) {
        throw DimensionError("lorentz_inner: size mismatch " + std::to_string(x.size()) +
                             " vs " + std::to_string(y.size()));
    }
    const auto n = x.size() - 1;
    return x.tail(n).dot(y.tail(n)) - x[0] * y[0];
}

double sinh_over_x(double t) {
    double a = std::abs(t);
    if (a < 1e-6) {
        double t2 = t * t;
        return 1.0 + t2 / 6.0 + t2 * t2 / 120.0;
    }
    return std::sinh(t) / t;
}

double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y, Curvature c) {
    double beta = -c.value() * lorentz_inner(x.coords(), y.coords());
    if (beta < 1.0) beta = 1.0;
    return std::acosh(beta) / c.sqrt();
}

TangentVector tangent_project(const LorentzPoint& z, const Eigen::Ref<const Vec>& u, Curvature c) {
    Vec v = u + c.value() * lorentz_inner(z.coords(), u) * z.coords();
    // The projection is tangent by construction; rebuilding through the
    // checking constructor would reject perfectly fine large inputs.
    return TangentVector(z, std::move(v));
}

double tangent_norm(const TangentVector& v) {
    return std::sqrt(std::max(0.0, lorentz_inner(v.components(), v.components())));
}

LorentzPoint expmap(const LorentzPoint& z, const TangentVector& v, Curvature c) {
    if (v.components().size() != z.coords().size()) {
        throw DimensionError("expmap: tangent vector and base point dimensions differ");
    }
    double nrm = tangent_norm(v);
    if (nrm == 0.0) {
        return z;
    }
    double t = c.sqrt() * nrm;
    Vec ambient = std::cosh(t) * z.coords() + sinh_over_x(t) * v.components();
    return LorentzPoint::from_ambient(ambient, c);
}

TangentVector logmap(const LorentzPoint& z, const LorentzPoint& x, Curvature c) {
    if (x.coords().size() != z.coords().size()) {
        throw DimensionError("logmap: point dimensions differ");
    }
    // w = x + c <z,x>_L z is the tangent projection of x at z; its Lorentz
    // norm relates to the distance through sinh, which is far better
    // conditioned near zero than the acosh route.
    double ip = lorentz_inner(z.coords(), x.coords());
    Vec w = x.coords() + c.value() * ip * z.coords();
    double w2 = lorentz_inner(w, w);
    if (w2 <= 0.0) {
        return TangentVector(z, Vec::Zero(z.coords().size()));
    }
    double wn = std::sqrt(w2);
    double dist = std::asinh(c.sqrt() * wn) / c.sqrt();
    return TangentVector(z, (dist / wn) * w);
}

TangentVector parallel_transport(const LorentzPoint& src, const LorentzPoint& dst,
                                 const TangentVector& v, Curvature c) {
    if (src.coords().size() != dst.coords().size()) {
        throw DimensionError("parallel_transport: point dimensions differ");
    }
    if (v.components().size() != src.coords().size()) {
        throw DimensionError("parallel_transport: tangent vector dimension differs");
    }
    double cc = c.value();
    double denom = 1.0 - cc * lorentz_inner(src.coords(), dst.coords());
    double num = cc * lorentz_inner(dst.coords(), v.components());
    Vec out = v.components() + (num / denom) * (src.coords() + dst.coords());
    return TangentVector(dst, std::move(out));
}

double manifold_violation(const LorentzPoint& z, Curvature c) {
    return std::abs(c.value() * lorentz_inner(z.coords(), z.coords()) + 1.0);
}

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Curvature curvature_from_param(double rho) {
    if (!std::isfinite(rho)) {
        throw NumericError("curvature parameter is not finite");
    }
    return Curvature(std::max(softplus(rho), 1e-12));
}

double curvature_param_from(double c) {
    if (!(c > 0.0)) {
        throw NumericError("cannot invert softplus at c = " + std::to_string(c));
    }
    return c > 30.0 ? c : std::log(std::expm1(c));
}

double curvature_param_chain(double rho) {
    if (softplus(rho) < 1e-12) return 0.0;
    if (rho >= 0.0) return 1.0 / (1.0 + std::exp(-rho));
    double e = std::exp(rho);
    return e / (1.0 + e);
}

} // namespace hod
