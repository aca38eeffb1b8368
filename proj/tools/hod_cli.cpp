#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "hod/checkpoint.hpp"
#include "hod/data.hpp"
#include "hod/outliers.hpp"
#include "hod/scores.hpp"
#include "hod/trainer.hpp"

namespace {

using namespace hod;

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

enum class Method { knn, ebo, softmax, origin };

Method parse_method(const std::string& name) {
    if (name == "knn") return Method::knn;
    if (name == "ebo") return Method::ebo;
    if (name == "softmax") return Method::softmax;
    if (name == "origin") return Method::origin;
    throw ConfigError("unknown scoring method '" + name +
                      "', expected knn, ebo, softmax or origin");
}

std::string bank_path(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

void require_classifier(const Checkpoint& ck) {
    if (ck.classifier.planes.empty()) {
        throw ConfigError(
            "checkpoint contains no class hyperplanes; train with classifier_iters > 0");
    }
}

std::vector<double> score_points(const Checkpoint& ck, const EmbeddingBank& reference,
                                 const std::vector<LorentzPoint>& points, Method method,
                                 Eigen::Index k) {
    const Curvature c = ck.head.curvature();
    std::vector<double> out;
    out.reserve(points.size());
    switch (method) {
    case Method::knn:
        return knn_scores(reference, points, k);
    case Method::ebo:
        require_classifier(ck);
        for (const LorentzPoint& z : points) {
            out.push_back(ebo_score(class_logits(z, ck.classifier, c), 1.0));
        }
        return out;
    case Method::softmax:
        require_classifier(ck);
        for (const LorentzPoint& z : points) {
            out.push_back(softmax_score(class_logits(z, ck.classifier, c)));
        }
        return out;
    case Method::origin:
        for (const LorentzPoint& z : points) out.push_back(origin_distance_score(z, c));
        return out;
    }
    throw ConfigError("unhandled scoring method");
}

Eigen::Index clip_k(Eigen::Index k, Eigen::Index bank_size) {
    return std::max<Eigen::Index>(1, std::min(k, bank_size));
}

struct GenArgs {
    std::string out_dir;
    std::string config;
    std::vector<std::string> sets;
};

int do_gen(const GenArgs& a) {
    const Config cfg = parse_config(a.config, a.sets);
    const SynthData data = gen_synthetic(cfg.data);
    write_dataset(data, a.out_dir);
    std::cout << "wrote " << a.out_dir << ": train " << data.train_id.size() << ", val "
              << data.val_id.size() << "+" << data.val_ood.size() << ", test "
              << data.test_id.size() << "+" << data.test_ood.size() << ", dim "
              << data.train_id.dim() << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_dir;
    std::string out_ckpt;
    std::string config;
    std::vector<std::string> sets;
};

int do_train(const TrainArgs& a) {
    const Config cfg = parse_config(a.config, a.sets);
    const FeatureBank bank = read_feature_file(bank_path(a.data_dir, files::kTrainId));
    TrainResult result = train(bank, cfg.train, &std::cerr);
    if (cfg.train.classifier_iters > 0) {
        fit_classifier(result.checkpoint, bank, cfg.train, &std::cerr);
    }
    save_checkpoint(result.checkpoint, a.out_ckpt);
    const std::string history_path = a.out_ckpt + ".history.tsv";
    write_history(result.history, history_path);

    const HistoryRow& last = result.history.back();
    std::cout << "trained " << cfg.train.iterations << " iterations, final loss "
              << g17(last.loss) << ", skipped " << result.skipped_batches << " batches\n";
    std::cout << "checkpoint " << a.out_ckpt << "\n";
    std::cout << "history " << history_path << "\n";
    return 0;
}

struct SynthArgs {
    std::string ckpt;
    std::string data_dir;
};

int do_synth(const SynthArgs& a) {
    const Checkpoint ck = load_checkpoint(a.ckpt);
    const FeatureBank bank = read_feature_file(bank_path(a.data_dir, files::kTrainId));
    const EmbeddingBank emb = embed_bank(ck, bank);

    const OutlierConfig cfg;
    const SynthesizedSet set = synthesize_outliers(emb.points(), cfg, emb.curvature(), Rng(0));

    for (std::size_t i = 0; i < set.outliers.size(); ++i) {
        const LorentzPoint& z = set.outliers[i];
        std::cout << set.seed_index[i] << '\t' << g17(z.space().norm()) << '\t';
        for (Eigen::Index j = 0; j < z.space().size(); ++j) {
            if (j > 0) std::cout << ' ';
            std::cout << g17(z.space()[j]);
        }
        std::cout << '\n';
    }
    std::cerr << "synthesized " << set.outliers.size() << " outliers from "
              << cfg.seed_count(emb.size()) << " seeds\n";
    return 0;
}

struct ScoreArgs {
    std::string ckpt;
    std::string bank;
    std::string queries;
    std::string method;
    Eigen::Index k = 10;
};

int do_score(const ScoreArgs& a) {
    const Checkpoint ck = load_checkpoint(a.ckpt);
    const Method method = parse_method(a.method);
    const EmbeddingBank reference = embed_bank(ck, read_feature_file(a.bank));
    const EmbeddingBank queries = embed_bank(ck, read_feature_file(a.queries));
    const Eigen::Index k = clip_k(a.k, reference.size());
    const std::vector<double> scores = score_points(ck, reference, queries.points(), method, k);
    for (double s : scores) std::cout << g17(s) << '\n';
    return 0;
}

struct EvalArgs {
    std::string ckpt;
    std::string data_dir;
    std::vector<Eigen::Index> k_grid;
};

int do_eval(const EvalArgs& a) {
    const Checkpoint ck = load_checkpoint(a.ckpt);
    const FeatureBank train_bank = read_feature_file(bank_path(a.data_dir, files::kTrainId));
    const EmbeddingBank reference = embed_bank(ck, train_bank);
    const EmbeddingBank val_id =
        embed_bank(ck, read_feature_file(bank_path(a.data_dir, files::kValId)));
    const EmbeddingBank val_ood =
        embed_bank(ck, read_feature_file(bank_path(a.data_dir, files::kValOod)));
    const EmbeddingBank test_id =
        embed_bank(ck, read_feature_file(bank_path(a.data_dir, files::kTestId)));
    const EmbeddingBank test_ood =
        embed_bank(ck, read_feature_file(bank_path(a.data_dir, files::kTestOod)));

    std::vector<Eigen::Index> grid = a.k_grid;
    if (grid.empty()) grid = default_k_grid(reference.size());
    const Eigen::Index k = tune_k(reference, val_id.points(), val_ood.points(), grid);

    ScoreSet scores;
    scores.id_scores = knn_scores(reference, test_id.points(), k);
    scores.ood_scores = knn_scores(reference, test_ood.points(), k);

    std::cout << "auroc=" << g17(auroc(scores)) << " fpr95=" << g17(fpr_at_tpr(scores, 0.95))
              << " k=" << k << "\n";
    return 0;
}

struct SweepArgs {
    std::string ckpt;
    std::string data_dir;
    std::vector<Eigen::Index> grid;
};

int do_sweep(const SweepArgs& a) {
    const Checkpoint ck = load_checkpoint(a.ckpt);
    const FeatureBank train_bank = read_feature_file(bank_path(a.data_dir, files::kTrainId));
    const EmbeddingBank reference = embed_bank(ck, train_bank);
    const EmbeddingBank val_id =
        embed_bank(ck, read_feature_file(bank_path(a.data_dir, files::kValId)));
    const EmbeddingBank val_ood =
        embed_bank(ck, read_feature_file(bank_path(a.data_dir, files::kValOod)));

    for (const KSweepEntry& entry :
         sweep_k(reference, val_id.points(), val_ood.points(), a.grid)) {
        std::cout << "k=" << entry.k << " auroc=" << g17(entry.auroc) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperbolic embedding trainer and out-of-distribution scorer"};
    app.require_subcommand(1);

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic labelled dataset");
    gen->add_option("--out", gen_args.out_dir, "Directory for the five feature banks")
        ->required();
    gen->add_option("--config", gen_args.config, "key=value config file");
    gen->add_option("--set", gen_args.sets, "Override one config key, e.g. --set dim=16");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a projection head");
    train_cmd->add_option("--data", train_args.data_dir, "Dataset directory")->required();
    train_cmd->add_option("--out", train_args.out_ckpt, "Checkpoint output path")->required();
    train_cmd->add_option("--config", train_args.config, "key=value config file");
    train_cmd->add_option("--set", train_args.sets, "Override one config key");

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Dump synthetic outliers for a checkpoint");
    synth->add_option("--ckpt", synth_args.ckpt, "Checkpoint path")->required();
    synth->add_option("--data", synth_args.data_dir, "Dataset directory")->required();

    ScoreArgs score_args;
    CLI::App* score = app.add_subcommand("score", "Score the rows of one feature file");
    score->add_option("--ckpt", score_args.ckpt, "Checkpoint path")->required();
    score->add_option("--bank", score_args.bank, "Reference feature file (knn neighbours)")
        ->required();
    score->add_option("--queries", score_args.queries, "Feature file to score")->required();
    score->add_option("--method", score_args.method, "knn, ebo, softmax or origin")->required();
    score->add_option("--k", score_args.k, "Neighbour count for knn (clamped to bank size)");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "AUROC and FPR@95%TPR on the test split");
    eval->add_option("--ckpt", eval_args.ckpt, "Checkpoint path")->required();
    eval->add_option("--data", eval_args.data_dir, "Dataset directory")->required();
    eval->add_option("--k-grid", eval_args.k_grid,
                     "Neighbour counts to tune over, e.g. 1,5,10 (default: built-in grid)")
        ->delimiter(',');

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep-k", "Validation AUROC for every k in a grid");
    sweep->add_option("--ckpt", sweep_args.ckpt, "Checkpoint path")->required();
    sweep->add_option("--data", sweep_args.data_dir, "Dataset directory")->required();
    sweep->add_option("--k-grid", sweep_args.grid, "Neighbour counts to try, e.g. 1,5,10")
        ->required()
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return do_gen(gen_args);
        if (train_cmd->parsed()) return do_train(train_args);
        if (synth->parsed()) return do_synth(synth_args);
        if (score->parsed()) return do_score(score_args);
        if (eval->parsed()) return do_eval(eval_args);
        if (sweep->parsed()) return do_sweep(sweep_args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
