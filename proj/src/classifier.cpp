#include "hod/classifier.hpp"

#include <cmath>

namespace hod {

namespace {
double checked_norm(const Hyperplane& h) {
    double n = h.orientation.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw NumericError("degenerate hyperplane: orientation norm is " + std::to_string(n));
    }
    return n;
}
} // namespace

Vec hyperplane_normal(const Hyperplane& h, Curvature c) {
    double n = checked_norm(h);
    double asc = h.offset * c.sqrt();
    Vec w(h.orientation.size() + 1);
    w[0] = std::sinh(asc) * n;
    w.tail(h.orientation.size()) = std::cosh(asc) * h.orientation;
    return w;
}

double hyperplane_margin(const LorentzPoint& z, const Hyperplane& h, Curvature c) {
    if (z.dim() != h.orientation.size()) {
        throw DimensionError("point dimension " + std::to_string(z.dim()) +
                             " does not match hyperplane dimension " +
                             std::to_string(h.orientation.size()));
    }
    double n = checked_norm(h);
    double asc = h.offset * c.sqrt();
    return std::cosh(asc) * h.orientation.dot(z.space()) - std::sinh(asc) * n * z.time();
}

double hyperplane_distance(const LorentzPoint& z, const Hyperplane& h, Curvature c) {
    double n = h.orientation.norm();
    double m = hyperplane_margin(z, h, c);
    return std::asinh(c.sqrt() * std::abs(m) / n) / c.sqrt();
}

double hyperplane_logit(const LorentzPoint& z, const Hyperplane& h, Curvature c) {
    double n = h.orientation.norm();
    double m = hyperplane_margin(z, h, c);
    return n / c.sqrt() * std::asinh(c.sqrt() * m / n);
}

Vec class_logits(const LorentzPoint& z, const ClassifierParams& params, Curvature c) {
    Vec out(params.planes.size());
    for (std::size_t k = 0; k < params.planes.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = hyperplane_logit(z, params.planes[k], c);
    }
    return out;
}

LogitPullback logit_pullback(const LorentzPoint& z, const Hyperplane& h, Curvature c) {
    double q = checked_norm(h);
    if (z.dim() != h.orientation.size()) {
        throw DimensionError("logit_pullback: dimension mismatch");
    }
    const double cc = c.value();
    const double sc = c.sqrt();
    const double asc = h.offset * sc;
    const double sa = std::sinh(asc);
    const double ca = std::cosh(asc);
    const double A = h.orientation.dot(z.space());
    const double zt = z.time();
    const double m = ca * A - sa * q * zt;
    const double s = sc * m / q;
    const double r = std::sqrt(1.0 + s * s);

    LogitPullback out;
    out.logit = q / sc * std::asinh(s);

    // dm/da carries a factor sqrt(c) from the sinh/cosh arguments.
    out.d_offset = (1.0 / r) * sc * (sa * A - ca * q * zt);

    // Orientation enters through A, through the sa*q*zt term and through the
    // explicit |o| scaling of the logit.
    double dl_dq = std::asinh(s) / sc - (m / q) / r;
    out.d_orientation =
        dl_dq * (h.orientation / q) + (1.0 / r) * (ca * z.space() - sa * zt * (h.orientation / q));

    // Point gradient: ambient space part plus the time-reconstruction chain
    // dt/dspace = space/time.
    double dl_dt = (1.0 / r) * (-sa * q);
    out.d_space = (1.0 / r) * ca * h.orientation + dl_dt * (z.space() / zt);

    // Curvature: explicit sqrt(c) factors and the c-dependence of sinh/cosh
    // of a*sqrt(c); the manifold-parametrized variant adds the time
    // reconstruction chain dt/dc = -1/(2 c^2 t).
    double dm_dc = h.offset / (2.0 * sc) * (sa * A - ca * q * zt);
    out.d_curvature_ambient = -out.logit / (2.0 * cc) + m / (2.0 * cc * r) + (1.0 / r) * dm_dc;
    out.d_curvature = out.d_curvature_ambient + dl_dt * (-1.0 / (2.0 * cc * cc * zt));
    return out;
}

Hyperplane random_hyperplane(Eigen::Index n, Rng& rng) {
    if (n < 1) {
        throw DimensionError("hyperplane needs at least one dimension");
    }
    Hyperplane h;
    h.offset = 0.0;
    h.orientation.resize(n);
    do {
        for (Eigen::Index i = 0; i < n; ++i) h.orientation[i] = rng.normal();
    } while (h.orientation.norm() < 1e-12);
    h.orientation.normalize();
    return h;
}

} // namespace hod
