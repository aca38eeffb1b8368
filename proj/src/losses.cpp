#include "hod/losses.hpp"

#include <cmath>
#include <limits>

namespace hod {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Folds an ambient-coordinate gradient into space-coordinate and curvature
// accumulators, using time = sqrt(1/c + |space|^2).
void fold_time(const LorentzPoint& z, double d_time, Curvature c, Vec& d_space_acc,
               double& d_curv_acc) {
    d_space_acc += d_time * (z.space() / z.time());
    d_curv_acc += d_time * (-1.0 / (2.0 * c.value() * c.value() * z.time()));
}

struct HsupCore {
    double value = 0.0;
    Eigen::Index B = 0;
    Mat dist;   // pairwise geodesic distances
    Mat beta;   // acosh arguments
    Mat ip;     // Lorentz inner products
};

HsupCore hsup_forward(const ContrastiveBatch& batch, double tau, Curvature c,
                      bool keep_pairs) {
    validate_contrastive_batch(batch);
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("temperature must be positive, got " + std::to_string(tau));
    }
    const Eigen::Index B = static_cast<Eigen::Index>(batch.points.size());

    HsupCore core;
    core.B = B;
    core.dist.setZero(B, B);
    if (keep_pairs) {
        core.beta.setZero(B, B);
        core.ip.setZero(B, B);
    }
    for (Eigen::Index i = 0; i < B; ++i) {
        for (Eigen::Index j = i + 1; j < B; ++j) {
            double ip = lorentz_inner(batch.points[i].coords(), batch.points[j].coords());
            double beta = std::max(1.0, -c.value() * ip);
            double d = std::acosh(beta) / c.sqrt();
            core.dist(i, j) = core.dist(j, i) = d;
            if (keep_pairs) {
                core.beta(i, j) = core.beta(j, i) = beta;
                core.ip(i, j) = core.ip(j, i) = ip;
            }
        }
    }

    for (Eigen::Index i = 0; i < B; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j != i) mx = std::max(mx, -core.dist(i, j) / tau);
        }
        double denom = 0.0;
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j != i) denom += std::exp(-core.dist(i, j) / tau - mx);
        }
        double lse = mx + std::log(denom);
        int n_pos = 0;
        double pos_sum = 0.0;
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j != i && batch.labels[j] == batch.labels[i]) {
                ++n_pos;
                pos_sum += -core.dist(i, j) / tau - lse;
            }
        }
        core.value -= pos_sum / n_pos;
    }
    return core;
}

} // namespace

void validate_contrastive_batch(const ContrastiveBatch& batch) {
    const std::size_t B = batch.points.size();
    if (B < 2) {
        throw InvalidBatchError("contrastive batch needs at least 2 entries, got " +
                                std::to_string(B));
    }
    if (batch.labels.size() != B || (!batch.view_of.empty() && batch.view_of.size() != B)) {
        throw InvalidBatchError("batch field lengths disagree");
    }
    for (std::size_t i = 1; i < B; ++i) {
        if (batch.points[i].dim() != batch.points[0].dim()) {
            throw InvalidBatchError("batch embeddings have mixed dimensions");
        }
    }
    for (std::size_t i = 0; i < B; ++i) {
        bool has_pos = false;
        for (std::size_t j = 0; j < B && !has_pos; ++j) {
            has_pos = (j != i && batch.labels[j] == batch.labels[i]);
        }
        if (!has_pos) {
            throw InvalidBatchError("anchor " + std::to_string(i) +
                                    " (label " + std::to_string(batch.labels[i]) +
                                    ") has no positive in the batch");
        }
    }
}

double hsup_loss(const ContrastiveBatch& batch, double tau, Curvature c) {
    return hsup_forward(batch, tau, c, false).value;
}

HsupGrad hsup_loss_grad(const ContrastiveBatch& batch, double tau, double curvature_param) {
    Curvature c = curvature_from_param(curvature_param);
    HsupCore core = hsup_forward(batch, tau, c, true);
    const Eigen::Index B = core.B;
    const double cc = c.value();
    const double sc = c.sqrt();

    // dL/dS for the per-anchor softmax terms, S_ij = -d_ij / tau.
    Mat G = Mat::Zero(B, B);
    for (Eigen::Index i = 0; i < B; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j != i) mx = std::max(mx, -core.dist(i, j) / tau);
        }
        double denom = 0.0;
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j != i) denom += std::exp(-core.dist(i, j) / tau - mx);
        }
        int n_pos = 0;
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j != i && batch.labels[j] == batch.labels[i]) ++n_pos;
        }
        for (Eigen::Index j = 0; j < B; ++j) {
            if (j == i) continue;
            double p = std::exp(-core.dist(i, j) / tau - mx) / denom;
            double pos = (batch.labels[j] == batch.labels[i]) ? 1.0 / n_pos : 0.0;
            G(i, j) = p - pos;
        }
    }

    HsupGrad out;
    out.value = core.value;
    out.space.assign(static_cast<std::size_t>(B), Vec());
    Mat d_ambient = Mat::Zero(B, batch.points[0].coords().size());
    double d_curv = 0.0;

    for (Eigen::Index i = 0; i < B; ++i) {
        for (Eigen::Index j = i + 1; j < B; ++j) {
            double dd = -(G(i, j) + G(j, i)) / tau; // dL/d dist(i,j)
            if (dd == 0.0) continue;
            double beta = core.beta(i, j);
            if (beta <= 1.0 + 1e-12) continue; // clamped region, flat
            double root = std::sqrt(beta * beta - 1.0);
            // d = acosh(beta)/sqrt(c), beta = -c * ip
            double d_ip = dd * (-cc) / (sc * root);
            d_curv += dd * (beta / (cc * sc * root) - core.dist(i, j) / (2.0 * cc));
            const Vec& zi = batch.points[static_cast<std::size_t>(i)].coords();
            const Vec& zj = batch.points[static_cast<std::size_t>(j)].coords();
            const Eigen::Index n = zi.size() - 1;
            d_ambient.row(i).tail(n) += d_ip * zj.tail(n).transpose();
            d_ambient(i, 0) += d_ip * (-zj[0]);
            d_ambient.row(j).tail(n) += d_ip * zi.tail(n).transpose();
            d_ambient(j, 0) += d_ip * (-zi[0]);
        }
    }

    for (Eigen::Index i = 0; i < B; ++i) {
        const LorentzPoint& z = batch.points[static_cast<std::size_t>(i)];
        Vec ds = d_ambient.row(i).tail(z.dim()).transpose();
        fold_time(z, d_ambient(i, 0), c, ds, d_curv);
        out.space[static_cast<std::size_t>(i)] = std::move(ds);
    }
    out.curvature = d_curv;
    out.curvature_param = d_curv * curvature_param_chain(curvature_param);
    return out;
}

double uncertainty_loss(std::span<const LorentzPoint> id_points,
                        std::span<const LorentzPoint> outliers, const Hyperplane& plane,
                        Curvature c) {
    if (id_points.empty() || outliers.empty()) {
        throw InvalidBatchError("uncertainty loss needs nonempty ID and outlier sets");
    }
    double out_term = 0.0;
    for (const LorentzPoint& v : outliers) {
        out_term += softplus(hyperplane_logit(v, plane, c));
    }
    double id_term = 0.0;
    for (const LorentzPoint& z : id_points) {
        id_term += softplus(-hyperplane_logit(z, plane, c));
    }
    return out_term / static_cast<double>(outliers.size()) +
           id_term / static_cast<double>(id_points.size());
}

UncertaintyGrad uncertainty_loss_grad(std::span<const LorentzPoint> id_points,
                                      std::span<const LorentzPoint> outliers,
                                      const Hyperplane& plane, double curvature_param) {
    if (id_points.empty() || outliers.empty()) {
        throw InvalidBatchError("uncertainty loss needs nonempty ID and outlier sets");
    }
    Curvature c = curvature_from_param(curvature_param);

    UncertaintyGrad out;
    out.plane.offset = 0.0;
    out.plane.orientation = Vec::Zero(plane.orientation.size());
    out.id_space.reserve(id_points.size());

    double d_curv = 0.0;
    const double inv_out = 1.0 / static_cast<double>(outliers.size());
    for (const LorentzPoint& v : outliers) {
        LogitPullback pb = logit_pullback(v, plane, c);
        out.value += softplus(pb.logit) * inv_out;
        double dl = sigmoid(pb.logit) * inv_out;
        out.plane.offset += dl * pb.d_offset;
        out.plane.orientation += dl * pb.d_orientation;
        // outliers are fixed ambient constants, so no time reconstruction
        d_curv += dl * pb.d_curvature_ambient;
    }
    const double inv_id = 1.0 / static_cast<double>(id_points.size());
    for (const LorentzPoint& z : id_points) {
        LogitPullback pb = logit_pullback(z, plane, c);
        out.value += softplus(-pb.logit) * inv_id;
        double dl = -sigmoid(-pb.logit) * inv_id;
        out.plane.offset += dl * pb.d_offset;
        out.plane.orientation += dl * pb.d_orientation;
        d_curv += dl * pb.d_curvature;
        out.id_space.push_back(dl * pb.d_space);
    }
    out.curvature = d_curv;
    out.curvature_param = d_curv * curvature_param_chain(curvature_param);
    return out;
}

double total_loss(double contrastive, double uncertainty, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha must be nonnegative, got " + std::to_string(alpha));
    }
    if (!std::isfinite(contrastive) || !std::isfinite(uncertainty)) {
        throw NumericError("loss terms must be finite");
    }
    return contrastive + alpha * uncertainty;
}

} // namespace hod
