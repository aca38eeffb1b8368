#include "hod/head.hpp"

#include <cmath>
#include <limits>

namespace hod {

namespace {

// d/dt of sinh(t)/t; the series takes over where the direct form cancels.
double sinh_over_x_prime(double t) {
    if (std::abs(t) < 1e-3) {
        return t / 3.0 + t * t * t / 30.0;
    }
    return std::cosh(t) / t - std::sinh(t) / (t * t);
}

struct MlpCache {
    std::vector<Mat> pre;  // pre-activation per layer
    std::vector<Mat> post; // post-activation; last layer has none
};

Mat mlp_forward(const HeadParams& p, const Eigen::Ref<const Mat>& X, MlpCache* cache) {
    if (p.layers.empty()) throw ConfigError("head has no layers");
    if (X.cols() != p.feature_dim()) {
        throw DimensionError("features have " + std::to_string(X.cols()) +
                             " columns, head expects " + std::to_string(p.feature_dim()));
    }
    Mat cur = X;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const AffineLayer& layer = p.layers[l];
        if (layer.weight.cols() != cur.cols()) {
            throw DimensionError("layer " + std::to_string(l) + " expects " +
                                 std::to_string(layer.weight.cols()) + " inputs, got " +
                                 std::to_string(cur.cols()));
        }
        Mat pre = cur * layer.weight.transpose();
        pre.rowwise() += layer.bias.transpose();
        if (cache) cache->pre.push_back(pre);
        if (l + 1 < p.layers.size()) {
            cur = pre.cwiseMax(0.0);
            if (cache) cache->post.push_back(cur);
        } else {
            cur = std::move(pre);
        }
    }
    return cur;
}

// Accumulates layer gradients for dL/dU into grad; X is the batch input.
void mlp_backward(const HeadParams& p, const Eigen::Ref<const Mat>& X, const MlpCache& cache,
                  Mat d_out, ParamGrad& grad) {
    for (std::size_t l = p.layers.size(); l-- > 0;) {
        const Mat& input = (l == 0) ? static_cast<const Mat&>(X) : cache.post[l - 1];
        grad.layers[l].weight += d_out.transpose() * input;
        grad.layers[l].bias += d_out.colwise().sum().transpose();
        if (l > 0) {
            Mat d_in = d_out * p.layers[l].weight;
            d_out = d_in.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
}

struct LiftVjp {
    Vec d_u;
    double d_curvature = 0.0;
};

LiftVjp lift_vjp(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& d_space,
                 Curvature c) {
    LiftVjp out;
    const double r = u.norm();
    if (r == 0.0) {
        out.d_u = d_space;
        return out;
    }
    const double sc = c.sqrt();
    const double t = sc * r;
    if (t > detail::kMaxLiftArg) {
        // space = sinh(t_max)/sqrt(c) * u/|u|: only the direction survives.
        const double K = std::sinh(detail::kMaxLiftArg) / sc;
        Vec uhat = u / r;
        double along = d_space.dot(uhat);
        out.d_u = (K / r) * (d_space - along * uhat);
        out.d_curvature = along * (-K / (2.0 * c.value()));
        return out;
    }
    const double g = sinh_over_x(t);
    const double gp = sinh_over_x_prime(t);
    const double proj = d_space.dot(u);
    out.d_u = g * d_space + (gp * sc / r) * proj * u;
    out.d_curvature = proj * gp * (r / (2.0 * sc));
    return out;
}

void check_batch(const HeadParams& p, const HeadBatch& batch) {
    if (batch.features.rows() == 0) {
        throw InvalidBatchError("empty batch");
    }
    if (static_cast<Eigen::Index>(batch.labels.size()) != batch.features.rows()) {
        throw InvalidBatchError("feature rows and labels disagree");
    }
    if (batch.features.cols() != p.feature_dim()) {
        throw DimensionError("batch feature dimension mismatch");
    }
}

} // namespace

HeadParams HeadParams::init(Eigen::Index feature_dim, Eigen::Index embed_dim,
                            Eigen::Index hidden_dim, Rng& rng) {
    if (feature_dim < 1 || embed_dim < 1 || hidden_dim < 1) {
        throw ConfigError("head dimensions must be positive");
    }
    HeadParams p;
    AffineLayer l1;
    l1.weight.resize(hidden_dim, feature_dim);
    double s1 = std::sqrt(2.0 / static_cast<double>(feature_dim));
    for (Eigen::Index i = 0; i < hidden_dim; ++i) {
        for (Eigen::Index j = 0; j < feature_dim; ++j) l1.weight(i, j) = rng.normal(0.0, s1);
    }
    l1.bias = Vec::Zero(hidden_dim);
    AffineLayer l2;
    l2.weight.resize(embed_dim, hidden_dim);
    // Small output scale so fresh embeddings sit near the origin, the
    // low-certainty region; training grows their norm as classes separate.
    double s2 = 0.01 * std::sqrt(1.0 / static_cast<double>(hidden_dim));
    for (Eigen::Index i = 0; i < embed_dim; ++i) {
        for (Eigen::Index j = 0; j < hidden_dim; ++j) l2.weight(i, j) = rng.normal(0.0, s2);
    }
    l2.bias = Vec::Zero(embed_dim);
    p.layers = {std::move(l1), std::move(l2)};
    p.curvature_param = curvature_param_from(1.0);
    return p;
}

ParamGrad ParamGrad::zeros_like(const HeadParams& p) {
    ParamGrad g;
    for (const AffineLayer& l : p.layers) {
        AffineLayer z;
        z.weight = Mat::Zero(l.weight.rows(), l.weight.cols());
        z.bias = Vec::Zero(l.bias.size());
        g.layers.push_back(std::move(z));
    }
    g.curvature_param = 0.0;
    return g;
}

Vec head_forward(const HeadParams& p, const Eigen::Ref<const Vec>& feature) {
    return mlp_forward(p, feature.transpose(), nullptr).row(0).transpose();
}

Mat head_forward_batch(const HeadParams& p, const Eigen::Ref<const Mat>& features) {
    return mlp_forward(p, features, nullptr);
}

LorentzPoint lift(const Eigen::Ref<const Vec>& u, Curvature c) {
    const double r = u.norm();
    if (r == 0.0) {
        return LorentzPoint::origin(u.size(), c);
    }
    double t = c.sqrt() * r;
    if (t > detail::kMaxLiftArg) {
        Vec space = (std::sinh(detail::kMaxLiftArg) / c.sqrt()) * (u / r);
        return LorentzPoint::from_space(space, c);
    }
    return LorentzPoint::from_space(sinh_over_x(t) * u, c);
}

double head_loss(const HeadParams& p, const HeadBatch& batch, const HeadLossSettings& s) {
    check_batch(p, batch);
    Curvature c = p.curvature();
    Mat U = mlp_forward(p, batch.features, nullptr);
    std::vector<LorentzPoint> z;
    z.reserve(static_cast<std::size_t>(U.rows()));
    for (Eigen::Index b = 0; b < U.rows(); ++b) {
        z.push_back(lift(U.row(b).transpose(), c));
    }

    if (s.kind == LossKind::cross_entropy) {
        if (!s.classifier || s.classifier->planes.empty()) {
            throw ConfigError("cross entropy needs classifier planes");
        }
        double total = 0.0;
        for (Eigen::Index b = 0; b < U.rows(); ++b) {
            Vec logits = class_logits(z[static_cast<std::size_t>(b)], *s.classifier, c);
            int y = batch.labels[static_cast<std::size_t>(b)];
            if (y < 0 || y >= logits.size()) {
                throw InvalidBatchError("label " + std::to_string(y) + " out of range");
            }
            double mx = logits.maxCoeff();
            double lse = mx + std::log((logits.array() - mx).exp().sum());
            total += lse - logits[y];
        }
        return total / static_cast<double>(U.rows());
    }

    ContrastiveBatch cb;
    cb.points = z;
    cb.labels = batch.labels;
    double hs = hsup_loss(cb, s.tau, c);
    if (s.kind == LossKind::contrastive) {
        return hs;
    }
    if (!s.binary_plane || !s.outliers || s.outliers->empty()) {
        throw ConfigError("uncertainty term needs a binary plane and outliers");
    }
    double unc = uncertainty_loss(z, *s.outliers, *s.binary_plane, c);
    return total_loss(hs, unc, s.alpha);
}

HeadBackward head_backward(const HeadParams& p, const HeadBatch& batch,
                           const HeadLossSettings& s) {
    check_batch(p, batch);
    Curvature c = p.curvature();
    const Eigen::Index B = batch.features.rows();
    const Eigen::Index n = p.embed_dim();

    MlpCache cache;
    Mat U = mlp_forward(p, batch.features, &cache);

    HeadBackward out;
    out.grad = ParamGrad::zeros_like(p);
    out.embeddings.reserve(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
        out.embeddings.push_back(lift(U.row(b).transpose(), c));
    }

    std::vector<Vec> d_space(static_cast<std::size_t>(B), Vec::Zero(n));
    double d_curv = 0.0;

    if (s.kind == LossKind::cross_entropy) {
        if (!s.classifier || s.classifier->planes.empty()) {
            throw ConfigError("cross entropy needs classifier planes");
        }
        const int C = s.classifier->n_classes();
        out.classifier.assign(static_cast<std::size_t>(C), HyperplaneGrad{});
        for (int k = 0; k < C; ++k) {
            out.classifier[static_cast<std::size_t>(k)].orientation =
                Vec::Zero(s.classifier->planes[static_cast<std::size_t>(k)].orientation.size());
        }
        double total = 0.0;
        const double invB = 1.0 / static_cast<double>(B);
        for (Eigen::Index b = 0; b < B; ++b) {
            const LorentzPoint& z = out.embeddings[static_cast<std::size_t>(b)];
            std::vector<LogitPullback> pbs;
            Vec logits(C);
            for (int k = 0; k < C; ++k) {
                pbs.push_back(logit_pullback(z, s.classifier->planes[static_cast<std::size_t>(k)], c));
                logits[k] = pbs.back().logit;
            }
            int y = batch.labels[static_cast<std::size_t>(b)];
            if (y < 0 || y >= C) {
                throw InvalidBatchError("label " + std::to_string(y) + " out of range");
            }
            double mx = logits.maxCoeff();
            Vec expv = (logits.array() - mx).exp();
            double denom = expv.sum();
            total += (mx + std::log(denom) - logits[y]) * invB;
            for (int k = 0; k < C; ++k) {
                double coef = (expv[k] / denom - (k == y ? 1.0 : 0.0)) * invB;
                if (coef == 0.0) continue;
                const LogitPullback& pb = pbs[static_cast<std::size_t>(k)];
                d_space[static_cast<std::size_t>(b)] += coef * pb.d_space;
                out.classifier[static_cast<std::size_t>(k)].offset += coef * pb.d_offset;
                out.classifier[static_cast<std::size_t>(k)].orientation += coef * pb.d_orientation;
                d_curv += coef * pb.d_curvature;
            }
        }
        out.loss = out.contrastive = total;
    } else {
        ContrastiveBatch cb;
        cb.points = out.embeddings;
        cb.labels = batch.labels;
        HsupGrad hg = hsup_loss_grad(cb, s.tau, p.curvature_param);
        for (Eigen::Index b = 0; b < B; ++b) {
            d_space[static_cast<std::size_t>(b)] = std::move(hg.space[static_cast<std::size_t>(b)]);
        }
        d_curv += hg.curvature;
        out.contrastive = hg.value;
        out.loss = hg.value;

        if (s.kind == LossKind::contrastive_uncertainty) {
            if (!s.binary_plane || !s.outliers || s.outliers->empty()) {
                throw ConfigError("uncertainty term needs a binary plane and outliers");
            }
            UncertaintyGrad ug =
                uncertainty_loss_grad(out.embeddings, *s.outliers, *s.binary_plane,
                                      p.curvature_param);
            for (Eigen::Index b = 0; b < B; ++b) {
                d_space[static_cast<std::size_t>(b)] += s.alpha * ug.id_space[static_cast<std::size_t>(b)];
            }
            d_curv += s.alpha * ug.curvature;
            out.binary_plane.offset = s.alpha * ug.plane.offset;
            out.binary_plane.orientation = s.alpha * ug.plane.orientation;
            out.uncertainty = ug.value;
            out.loss = total_loss(hg.value, ug.value, s.alpha);
        }
    }

    Mat dU(B, n);
    for (Eigen::Index b = 0; b < B; ++b) {
        LiftVjp v = lift_vjp(U.row(b).transpose(), d_space[static_cast<std::size_t>(b)], c);
        dU.row(b) = v.d_u.transpose();
        d_curv += v.d_curvature;
    }
    mlp_backward(p, batch.features, cache, std::move(dU), out.grad);
    out.grad.curvature_param = d_curv * curvature_param_chain(p.curvature_param);
    return out;
}

} // namespace hod
