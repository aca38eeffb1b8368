#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "hod/checkpoint.hpp"
#include "hod/data.hpp"
#include "hod/losses.hpp"
#include "hod/metrics.hpp"
#include "hod/scores.hpp"
#include "hod/trainer.hpp"

namespace py = pybind11;
using namespace hod;

namespace {

FeatureBank to_bank(const Mat& features, const std::vector<int>& labels) {
    FeatureBank b;
    b.features = features;
    b.labels = labels;
    if (b.features.rows() != static_cast<Eigen::Index>(b.labels.size())) {
        throw DataError("features and labels disagree on the row count");
    }
    return b;
}

FeatureBank unlabelled(const Mat& features) {
    FeatureBank b;
    b.features = features;
    b.labels.assign(static_cast<std::size_t>(features.rows()), 0);
    return b;
}

Mat embed_to_mat(const Checkpoint& ck, const Mat& features) {
    const EmbeddingBank emb = embed_bank(ck, unlabelled(features));
    const Eigen::Index width = emb.points().front().coords().size();
    Mat out(emb.size(), width);
    for (Eigen::Index i = 0; i < emb.size(); ++i) {
        out.row(i) = emb.points()[static_cast<std::size_t>(i)].coords().transpose();
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_hod, m) {
    m.doc() = "Hyperbolic embeddings with synthetic-outlier OOD scoring";

    py::register_exception<Error>(m, "Error");
    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<NumericError>(m, "NumericError");
    py::register_exception<InvalidBatchError>(m, "InvalidBatchError");

    m.def(
        "distance",
        [](const Vec& x_space, const Vec& y_space, double c) {
            const Curvature cc(c);
            return lorentz_distance(LorentzPoint::from_space(x_space, cc),
                                    LorentzPoint::from_space(y_space, cc), cc);
        },
        py::arg("x_space"), py::arg("y_space"), py::arg("c"),
        "Geodesic distance between the points with these space coordinates.");

    m.def(
        "lift",
        [](const Vec& u, double c) {
            const Curvature cc(c);
            return Vec(lift(u, cc).coords());
        },
        py::arg("u"), py::arg("c"),
        "Ambient coordinates (time first) of the lifted head output.");

    m.def(
        "manifold_violation",
        [](const Vec& ambient, double c) {
            const Curvature cc(c);
            return manifold_violation(LorentzPoint::from_ambient(ambient, cc), cc);
        },
        py::arg("ambient"), py::arg("c"),
        "|c <z,z> + 1| of an ambient vector, zero on the sheet.");

    m.def(
        "hsup_loss",
        [](const Mat& spaces, const std::vector<int>& labels, double tau, double c) {
            const Curvature cc(c);
            ContrastiveBatch batch;
            batch.labels = labels;
            batch.points.reserve(static_cast<std::size_t>(spaces.rows()));
            for (Eigen::Index i = 0; i < spaces.rows(); ++i) {
                batch.points.push_back(LorentzPoint::from_space(spaces.row(i).transpose(), cc));
            }
            return hsup_loss(batch, tau, cc);
        },
        py::arg("spaces"), py::arg("labels"), py::arg("tau"), py::arg("c"),
        "Supervised contrastive loss over rows of space coordinates.");

    m.def(
        "auroc",
        [](std::vector<double> id_scores, std::vector<double> ood_scores) {
            return auroc(ScoreSet{std::move(id_scores), std::move(ood_scores)});
        },
        py::arg("id_scores"), py::arg("ood_scores"));

    m.def(
        "fpr_at_tpr",
        [](std::vector<double> id_scores, std::vector<double> ood_scores, double tpr) {
            return fpr_at_tpr(ScoreSet{std::move(id_scores), std::move(ood_scores)}, tpr);
        },
        py::arg("id_scores"), py::arg("ood_scores"), py::arg("tpr") = 0.95);

    m.def(
        "welch_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const WelchResult r = welch_t_test(a, b);
            return py::make_tuple(r.t, r.df, r.p, r.degenerate);
        },
        py::arg("a"), py::arg("b"), "Returns (t, df, p, degenerate).");

    m.def(
        "regularized_incomplete_beta",
        [](double a, double b, double x) { return regularized_incomplete_beta(x, a, b); },
        py::arg("a"), py::arg("b"), py::arg("x"), "I_x(a, b), argument order as in scipy.");

    m.def(
        "gen_synthetic",
        [](const std::vector<std::string>& overrides) {
            const Config cfg = parse_config("", overrides);
            const SynthData d = gen_synthetic(cfg.data);
            py::dict out;
            auto put = [&](const char* key, const FeatureBank& b) {
                out[key] = py::make_tuple(b.features, b.labels);
            };
            put("train_id", d.train_id);
            put("val_id", d.val_id);
            put("val_ood", d.val_ood);
            put("test_id", d.test_id);
            put("test_ood", d.test_ood);
            return out;
        },
        py::arg("overrides") = std::vector<std::string>{},
        "Dict of split name -> (features, labels), same keys the CLI writes.");

    py::class_<Checkpoint>(m, "Model")
        .def_property_readonly(
            "curvature", [](const Checkpoint& ck) { return ck.head.curvature().value(); })
        .def_property_readonly(
            "embed_dim", [](const Checkpoint& ck) { return ck.head.embed_dim(); })
        .def_property_readonly(
            "n_classes", [](const Checkpoint& ck) { return ck.classifier.n_classes(); })
        .def("embed", &embed_to_mat, py::arg("features"),
             "Ambient coordinates (time first) of every row.")
        .def(
            "save", [](const Checkpoint& ck, const std::string& path) { save_checkpoint(ck, path); },
            py::arg("path"))
        .def_static(
            "load", [](const std::string& path) { return load_checkpoint(path); },
            py::arg("path"));

    m.def(
        "train",
        [](const Mat& features, const std::vector<int>& labels,
           const std::vector<std::string>& overrides) {
            const Config cfg = parse_config("", overrides);
            TrainResult r = train(to_bank(features, labels), cfg.train);
            if (cfg.train.classifier_iters > 0) {
                fit_classifier(r.checkpoint, to_bank(features, labels), cfg.train);
            }
            return r.checkpoint;
        },
        py::arg("features"), py::arg("labels"),
        py::arg("overrides") = std::vector<std::string>{},
        "Train a head on labelled rows; overrides use the config key=value syntax.");

    m.def(
        "knn_scores",
        [](const Checkpoint& ck, const Mat& ref_features, const std::vector<int>& ref_labels,
           const Mat& queries, Eigen::Index k) {
            const EmbeddingBank ref = embed_bank(ck, to_bank(ref_features, ref_labels));
            const EmbeddingBank q = embed_bank(ck, unlabelled(queries));
            return knn_scores(ref, q.points(), k);
        },
        py::arg("model"), py::arg("ref_features"), py::arg("ref_labels"), py::arg("queries"),
        py::arg("k"),
        "Negative k-th neighbour distance of each query against the reference rows.");
}
