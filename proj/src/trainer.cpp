#include "hod/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <unordered_map>

#include "hod/outliers.hpp"

namespace hod {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct AdamCtx {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double bc1; // 1 - beta1^step
    double bc2;
};

double adam_delta(double g, double& m, double& v, const AdamCtx& a) {
    m = a.beta1 * m + (1.0 - a.beta1) * g;
    v = a.beta2 * v + (1.0 - a.beta2) * g * g;
    return -a.lr * (m / a.bc1) / (std::sqrt(v / a.bc2) + a.eps);
}

void adam_vec(Vec& p, const Vec& g, Vec& m, Vec& v, const AdamCtx& a) {
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += adam_delta(g[i], m[i], v[i], a);
}

void adam_mat(Mat& p, const Mat& g, Mat& m, Mat& v, const AdamCtx& a) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            p(i, j) += adam_delta(g(i, j), m(i, j), v(i, j), a);
        }
    }
}

std::vector<LorentzPoint> lift_rows(const HeadParams& head, const Mat& features) {
    const Mat out = head_forward_batch(head, features);
    const Curvature c = head.curvature();
    std::vector<LorentzPoint> pts;
    pts.reserve(static_cast<std::size_t>(out.rows()));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        pts.push_back(lift(out.row(i).transpose(), c));
    }
    return pts;
}

double mean_space_norm(std::span<const LorentzPoint> pts) {
    double s = 0.0;
    for (const LorentzPoint& p : pts) s += p.space().norm();
    return s / static_cast<double>(pts.size());
}

void check_rows(const FeatureBank& bank, const char* who) {
    if (bank.features.rows() != static_cast<Eigen::Index>(bank.labels.size())) {
        throw DataError(std::string(who) + ": row/label count mismatch");
    }
    for (std::size_t i = 0; i < bank.labels.size(); ++i) {
        if (bank.labels[i] < 0) {
            throw DataError(std::string(who) + ": negative label at row " + std::to_string(i));
        }
    }
}

} // namespace

double lr_schedule(Eigen::Index iter, const TrainConfig& cfg) {
    if (iter < 0) throw ConfigError("iteration index must be nonnegative");
    if (cfg.warmup_iters > 0 && iter < cfg.warmup_iters) {
        return cfg.lr_max * static_cast<double>(iter) / static_cast<double>(cfg.warmup_iters);
    }
    const double span = static_cast<double>(cfg.iterations - cfg.warmup_iters);
    const double t =
        std::min(1.0, static_cast<double>(iter - cfg.warmup_iters) / span);
    return cfg.lr_max * 0.5 * (1.0 + std::cos(kPi * t));
}

OptimizerState make_optimizer(const HeadParams& params, Eigen::Index plane_dim) {
    OptimizerState st;
    st.m = ParamGrad::zeros_like(params);
    st.v = ParamGrad::zeros_like(params);
    st.plane_m = HyperplaneGrad{0.0, Vec::Zero(plane_dim)};
    st.plane_v = HyperplaneGrad{0.0, Vec::Zero(plane_dim)};
    st.step = 0;
    return st;
}

void adamw_step(HeadParams& params, Hyperplane& plane, const ParamGrad& grad,
                const HyperplaneGrad& plane_grad, OptimizerState& state, double lr,
                const TrainConfig& cfg, bool update_head) {
    if (grad.layers.size() != params.layers.size() ||
        state.m.layers.size() != params.layers.size()) {
        throw DimensionError("optimizer step: layer count mismatch");
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const AffineLayer& p = params.layers[l];
        const AffineLayer& g = grad.layers[l];
        if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
            g.bias.size() != p.bias.size()) {
            throw DimensionError("optimizer step: gradient shape mismatch in layer " +
                                 std::to_string(l));
        }
    }
    if (plane_grad.orientation.size() != plane.orientation.size()) {
        throw DimensionError("optimizer step: plane gradient dimension mismatch");
    }

    state.step += 1;
    const AdamCtx a{lr,
                    cfg.beta1,
                    cfg.beta2,
                    cfg.epsilon,
                    1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)),
                    1.0 - std::pow(cfg.beta2, static_cast<double>(state.step))};

    if (update_head) {
        const double keep = 1.0 - lr * cfg.weight_decay;
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            AffineLayer& p = params.layers[l];
            p.weight *= keep; // decoupled decay, weights only
            adam_mat(p.weight, grad.layers[l].weight, state.m.layers[l].weight,
                     state.v.layers[l].weight, a);
            adam_vec(p.bias, grad.layers[l].bias, state.m.layers[l].bias,
                     state.v.layers[l].bias, a);
        }
        params.curvature_param += adam_delta(grad.curvature_param, state.m.curvature_param,
                                             state.v.curvature_param, a);
    }
    plane.offset += adam_delta(plane_grad.offset, state.plane_m.offset, state.plane_v.offset, a);
    adam_vec(plane.orientation, plane_grad.orientation, state.plane_m.orientation,
             state.plane_v.orientation, a);
}

Checkpoint init_model(const TrainConfig& cfg, Eigen::Index feature_dim) {
    cfg.validate();
    if (feature_dim < 1) throw DimensionError("feature dimension must be at least 1");
    Rng root(cfg.seed);
    Rng init_rng = root.stream(0);
    Checkpoint ck;
    ck.head = HeadParams::init(feature_dim, cfg.embed_dim, cfg.resolved_hidden_dim(), init_rng);
    ck.binary_plane = random_hyperplane(cfg.embed_dim, init_rng);
    return ck;
}

TrainResult train(const FeatureBank& bank, const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    check_rows(bank, "training set");
    if (bank.size() < 2) throw DataError("training needs at least 2 rows");

    if (cfg.view_mode == ViewMode::single_view) {
        std::unordered_map<int, Eigen::Index> counts;
        for (int lab : bank.labels) ++counts[lab];
        for (const auto& [lab, count] : counts) {
            if (count < 2) {
                throw InvalidBatchError(
                    "single-view training needs every class to appear at least twice; class " +
                    std::to_string(lab) + " has one row");
            }
        }
    }

    Checkpoint ck = init_model(cfg, bank.dim());
    // Independent streams per consumer so changing one stage never shifts
    // the draws of another. Stream 0 is taken by init_model.
    Rng root(cfg.seed);
    Rng batch_rng = root.stream(1);
    Rng jitter_rng = root.stream(2);
    Rng synth_root = root.stream(3);

    Vec jitter_std = Vec::Zero(bank.dim());
    if (cfg.view_mode == ViewMode::two_view_jitter) {
        const Vec mean = bank.features.colwise().mean();
        const Mat centered = bank.features.rowwise() - mean.transpose();
        const Vec var = centered.array().square().colwise().sum().transpose() /
                        static_cast<double>(bank.size() - 1);
        jitter_std = cfg.jitter_scale * var.array().sqrt();
    }

    const Eigen::Index n_rows = bank.size();
    const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n_rows);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rows));
    std::iota(order.begin(), order.end(), 0);
    Eigen::Index cursor = n_rows; // forces a shuffle before the first batch

    OptimizerState opt = make_optimizer(ck.head, cfg.embed_dim);
    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.iterations));

    for (Eigen::Index iter = 0; iter < cfg.iterations; ++iter) {
        if (cursor + batch > n_rows) {
            batch_rng.shuffle(order.begin(), order.end());
            cursor = 0;
        }
        HeadBatch hb;
        if (cfg.view_mode == ViewMode::two_view_jitter) {
            hb.features.resize(2 * batch, bank.dim());
            hb.labels.resize(static_cast<std::size_t>(2 * batch));
            for (Eigen::Index b = 0; b < batch; ++b) {
                const Eigen::Index src = order[static_cast<std::size_t>(cursor + b)];
                for (Eigen::Index view = 0; view < 2; ++view) {
                    const Eigen::Index row = 2 * b + view;
                    for (Eigen::Index j = 0; j < bank.dim(); ++j) {
                        hb.features(row, j) =
                            bank.features(src, j) + jitter_std[j] * jitter_rng.normal();
                    }
                    hb.labels[static_cast<std::size_t>(row)] =
                        bank.labels[static_cast<std::size_t>(src)];
                }
            }
        } else {
            hb.features.resize(batch, bank.dim());
            hb.labels.resize(static_cast<std::size_t>(batch));
            for (Eigen::Index b = 0; b < batch; ++b) {
                const Eigen::Index src = order[static_cast<std::size_t>(cursor + b)];
                hb.features.row(b) = bank.features.row(src);
                hb.labels[static_cast<std::size_t>(b)] =
                    bank.labels[static_cast<std::size_t>(src)];
            }
        }
        cursor += batch;

        const double lr = lr_schedule(iter, cfg);
        const bool update_head =
            !(cfg.freeze_head_after >= 0 && iter >= cfg.freeze_head_after);

        try {
            const Curvature c = ck.head.curvature();
            std::vector<LorentzPoint> outliers;
            if (cfg.alpha > 0.0 && iter >= cfg.outliers.start_iteration) {
                const std::vector<LorentzPoint> emb = lift_rows(ck.head, hb.features);
                SynthesizedSet syn = synthesize_outliers(
                    emb, cfg.outliers, c, synth_root.stream(static_cast<std::uint64_t>(iter)));
                outliers = std::move(syn.outliers);
            }

            HeadLossSettings s;
            s.tau = cfg.tau;
            s.alpha = cfg.alpha;
            if (!outliers.empty()) {
                s.kind = LossKind::contrastive_uncertainty;
                s.binary_plane = &*ck.binary_plane;
                s.outliers = &outliers;
            } else {
                s.kind = LossKind::contrastive;
            }
            const HeadBackward bw = head_backward(ck.head, hb, s);

            HyperplaneGrad plane_grad = bw.binary_plane;
            if (plane_grad.orientation.size() == 0) {
                plane_grad = HyperplaneGrad{0.0, Vec::Zero(cfg.embed_dim)};
            }
            adamw_step(ck.head, *ck.binary_plane, bw.grad, plane_grad, opt, lr, cfg,
                       update_head);

            const LorentzPoint o = LorentzPoint::origin(cfg.embed_dim, c);
            double origin_dist = 0.0;
            for (const LorentzPoint& z : bw.embeddings) origin_dist += lorentz_distance(o, z, c);
            origin_dist /= static_cast<double>(bw.embeddings.size());

            result.history.push_back({iter, bw.loss, bw.contrastive, bw.uncertainty, lr,
                                      origin_dist,
                                      static_cast<Eigen::Index>(outliers.size())});
            if (!outliers.empty()) {
                result.last_outlier_iteration = iter;
                result.final_outlier_mean_norm = mean_space_norm(outliers);
                result.final_id_mean_norm = mean_space_norm(bw.embeddings);
            }
        } catch (const InvalidBatchError& e) {
            ++result.skipped_batches;
            if (log) *log << "iteration " << iter << ": batch skipped (" << e.what() << ")\n";
        }
    }

    result.checkpoint = std::move(ck);
    return result;
}

EmbeddingBank embed_bank(const Checkpoint& ckpt, const FeatureBank& bank) {
    if (ckpt.head.layers.empty()) throw DataError("checkpoint has no head layers");
    check_rows(bank, "feature bank");
    if (bank.size() < 1) throw DataError("cannot embed an empty bank");
    if (bank.dim() != ckpt.head.feature_dim()) {
        throw DimensionError("bank has " + std::to_string(bank.dim()) +
                             " features but the head expects " +
                             std::to_string(ckpt.head.feature_dim()));
    }
    std::vector<LorentzPoint> pts = lift_rows(ckpt.head, bank.features);
    return EmbeddingBank(std::move(pts), bank.labels, ckpt.head.curvature());
}

void fit_classifier(Checkpoint& ckpt, const FeatureBank& bank, const TrainConfig& cfg,
                    std::ostream* log) {
    cfg.validate();
    if (cfg.classifier_iters <= 0) return;
    check_rows(bank, "classifier set");
    if (bank.size() < 1) throw DataError("classifier fitting needs data");
    if (bank.dim() != ckpt.head.feature_dim()) {
        throw DimensionError("bank has " + std::to_string(bank.dim()) +
                             " features but the head expects " +
                             std::to_string(ckpt.head.feature_dim()));
    }

    int n_classes = 0;
    for (int lab : bank.labels) n_classes = std::max(n_classes, lab + 1);

    Rng root(cfg.seed);
    Rng plane_rng = root.stream(4);
    Rng order_rng = root.stream(5);

    const Eigen::Index n = ckpt.head.embed_dim();
    ClassifierParams params;
    params.planes.reserve(static_cast<std::size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) params.planes.push_back(random_hyperplane(n, plane_rng));

    std::vector<HyperplaneGrad> m(static_cast<std::size_t>(n_classes),
                                  HyperplaneGrad{0.0, Vec::Zero(n)});
    std::vector<HyperplaneGrad> v = m;

    const Eigen::Index n_rows = bank.size();
    const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n_rows);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rows));
    std::iota(order.begin(), order.end(), 0);
    Eigen::Index cursor = n_rows;

    double last_loss = 0.0;
    for (Eigen::Index it = 0; it < cfg.classifier_iters; ++it) {
        if (cursor + batch > n_rows) {
            order_rng.shuffle(order.begin(), order.end());
            cursor = 0;
        }
        HeadBatch hb;
        hb.features.resize(batch, bank.dim());
        hb.labels.resize(static_cast<std::size_t>(batch));
        for (Eigen::Index b = 0; b < batch; ++b) {
            const Eigen::Index src = order[static_cast<std::size_t>(cursor + b)];
            hb.features.row(b) = bank.features.row(src);
            hb.labels[static_cast<std::size_t>(b)] = bank.labels[static_cast<std::size_t>(src)];
        }
        cursor += batch;

        HeadLossSettings s;
        s.kind = LossKind::cross_entropy;
        s.classifier = &params;
        const HeadBackward bw = head_backward(ckpt.head, hb, s);
        last_loss = bw.loss;

        const AdamCtx a{cfg.classifier_lr,
                        cfg.beta1,
                        cfg.beta2,
                        cfg.epsilon,
                        1.0 - std::pow(cfg.beta1, static_cast<double>(it + 1)),
                        1.0 - std::pow(cfg.beta2, static_cast<double>(it + 1))};
        for (int k = 0; k < n_classes; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            params.planes[ku].offset +=
                adam_delta(bw.classifier[ku].offset, m[ku].offset, v[ku].offset, a);
            adam_vec(params.planes[ku].orientation, bw.classifier[ku].orientation,
                     m[ku].orientation, v[ku].orientation, a);
        }
    }
    if (log) {
        *log << "classifier: fitted " << n_classes << " planes, final batch loss " << last_loss
             << "\n";
    }
    ckpt.classifier = std::move(params);
}

void write_history(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "iter\tloss\thsup\tunc\tlr\tmean_origin_dist\tn_outliers\n";
    char buf[40];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << '\t' << buf;
    };
    for (const HistoryRow& r : history) {
        out << r.iteration;
        put(r.loss);
        put(r.contrastive);
        put(r.uncertainty);
        put(r.lr);
        put(r.mean_origin_distance);
        out << '\t' << r.n_outliers << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

} // namespace hod
