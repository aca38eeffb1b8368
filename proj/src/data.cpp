#include "hod/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "hod/rng.hpp"
#include "wire.hpp"

namespace hod {

namespace {

constexpr char kMagic[4] = {'H', 'O', 'D', 'F'};
constexpr std::uint32_t kVersion = 1;

void check_bank(const FeatureBank& bank) {
    if (bank.features.rows() != static_cast<Eigen::Index>(bank.labels.size())) {
        throw DataError("feature bank has " + std::to_string(bank.features.rows()) +
                        " rows but " + std::to_string(bank.labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < bank.labels.size(); ++i) {
        if (bank.labels[i] < 0) {
            throw DataError("negative label at row " + std::to_string(i));
        }
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view token, const std::string& where) {
    double v = 0.0;
    const char* end = token.data() + token.size();
    auto [p, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw DataError(where + ": expected a real number, got '" + std::string(token) + "'");
    }
    return v;
}

long long parse_ll(std::string_view token, const std::string& where) {
    long long v = 0;
    const char* end = token.data() + token.size();
    auto [p, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw DataError(where + ": expected an integer, got '" + std::string(token) + "'");
    }
    return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace

FeatureBank read_feature_file(const std::string& path) {
    {
        wire::Reader sniff(path);
        char magic[4];
        if (sniff.try_peek(magic, 4) && std::memcmp(magic, kMagic, 4) == 0) {
            return read_feature_file_binary(path);
        }
    }
    return read_feature_file_csv(path);
}

FeatureBank read_feature_file_binary(const std::string& path) {
    wire::Reader r(path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("'" + path + "': not a feature bank file (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw DataError("'" + path + "': unsupported feature bank version " +
                        std::to_string(version));
    }
    const auto e = static_cast<Eigen::Index>(r.u32());
    if (e < 1) {
        throw DataError("'" + path + "': feature dimension must be at least 1");
    }
    const std::uint64_t count = r.u64();

    FeatureBank bank;
    bank.features.resize(static_cast<Eigen::Index>(count), e);
    bank.labels.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::int32_t label = r.i32();
        if (label < 0) {
            throw DataError("'" + path + "': negative label in row " + std::to_string(i) +
                            " at byte offset " + std::to_string(r.offset() - 4));
        }
        bank.labels[i] = label;
        for (Eigen::Index j = 0; j < e; ++j) {
            bank.features(static_cast<Eigen::Index>(i), j) = r.f64();
        }
    }
    r.expect_eof();
    return bank;
}

FeatureBank read_feature_file_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("'" + path + "': malformed header (empty file)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    constexpr std::string_view prefix = "label,dim=";
    if (line.rfind(prefix, 0) != 0) {
        throw DataError("'" + path + "' line 1: malformed header, expected 'label,dim=<e>'");
    }
    const long long e =
        parse_ll(std::string_view(line).substr(prefix.size()), "'" + path + "' line 1");
    if (e < 1) {
        throw DataError("'" + path + "' line 1: feature dimension must be at least 1");
    }

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::string where = "'" + path + "' line " + std::to_string(lineno);
        std::vector<std::string_view> tokens = split_commas(line);
        if (static_cast<long long>(tokens.size()) != e + 1) {
            throw DataError(where + ": expected " + std::to_string(e + 1) + " fields, got " +
                            std::to_string(tokens.size()));
        }
        const long long label = parse_ll(trim(tokens[0]), where);
        if (label < 0) throw DataError(where + ": negative label");
        labels.push_back(static_cast<int>(label));
        for (long long j = 1; j <= e; ++j) {
            values.push_back(parse_double(trim(tokens[static_cast<std::size_t>(j)]), where));
        }
    }

    FeatureBank bank;
    const auto rows = static_cast<Eigen::Index>(labels.size());
    bank.features.resize(rows, static_cast<Eigen::Index>(e));
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < e; ++j) {
            bank.features(i, j) = values[static_cast<std::size_t>(i * e + j)];
        }
    }
    bank.labels = std::move(labels);
    return bank;
}

void write_feature_file(const FeatureBank& bank, const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
        write_feature_file_csv(bank, path);
    } else {
        write_feature_file_binary(bank, path);
    }
}

void write_feature_file_binary(const FeatureBank& bank, const std::string& path) {
    check_bank(bank);
    wire::Writer w(path);
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(bank.dim()));
    w.u64(static_cast<std::uint64_t>(bank.size()));
    for (Eigen::Index i = 0; i < bank.size(); ++i) {
        w.i32(bank.labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < bank.dim(); ++j) {
            w.f64(bank.features(i, j));
        }
    }
}

void write_feature_file_csv(const FeatureBank& bank, const std::string& path) {
    check_bank(bank);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "label,dim=" << bank.dim() << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < bank.size(); ++i) {
        out << bank.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < bank.dim(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", bank.features(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

void SynthDataConfig::validate() const {
    if (n_classes < 1) throw ConfigError("n_classes must be at least 1");
    if (dim < 1) throw ConfigError("dim must be at least 1");
    if (per_class < 7) {
        throw ConfigError("per_class must be at least 7 so every split is nonempty");
    }
    if (!(mean_radius > 0.0) || !std::isfinite(mean_radius)) {
        throw ConfigError("mean_radius must be a positive finite real");
    }
    if (!(within_std > 0.0) || !std::isfinite(within_std)) {
        throw ConfigError("within_std must be a positive finite real");
    }
    if (ood_count < 1) throw ConfigError("ood_count must be at least 1");
}

namespace {

Vec unit_direction(Eigen::Index n, Rng& rng) {
    Vec v(n);
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
        norm = v.norm();
    } while (norm < 1e-9);
    return v / norm;
}

} // namespace

SynthData gen_synthetic(const SynthDataConfig& cfg) {
    cfg.validate();
    Rng root(cfg.seed);
    Rng mean_rng = root.stream(0);
    Rng id_rng = root.stream(1);
    Rng ood_rng = root.stream(2);

    std::vector<Vec> means;
    means.reserve(static_cast<std::size_t>(cfg.n_classes));
    for (int k = 0; k < cfg.n_classes; ++k) {
        means.push_back(cfg.mean_radius * unit_direction(cfg.dim, mean_rng));
    }

    const Eigen::Index n_train = cfg.per_class * 7 / 10;
    const Eigen::Index n_val = cfg.per_class * 15 / 100;
    const Eigen::Index n_test = cfg.per_class - n_train - n_val;

    SynthData out;
    auto alloc = [&](FeatureBank& b, Eigen::Index rows) {
        b.features.resize(rows, cfg.dim);
        b.labels.assign(static_cast<std::size_t>(rows), 0);
    };
    alloc(out.train_id, n_train * cfg.n_classes);
    alloc(out.val_id, n_val * cfg.n_classes);
    alloc(out.test_id, n_test * cfg.n_classes);
    alloc(out.val_ood, cfg.ood_count);
    alloc(out.test_ood, cfg.ood_count);

    Eigen::Index at_train = 0, at_val = 0, at_test = 0;
    for (int k = 0; k < cfg.n_classes; ++k) {
        for (Eigen::Index i = 0; i < cfg.per_class; ++i) {
            Vec row = means[static_cast<std::size_t>(k)];
            for (Eigen::Index j = 0; j < cfg.dim; ++j) row[j] += cfg.within_std * id_rng.normal();
            if (i < n_train) {
                out.train_id.features.row(at_train) = row;
                out.train_id.labels[static_cast<std::size_t>(at_train++)] = k;
            } else if (i < n_train + n_val) {
                out.val_id.features.row(at_val) = row;
                out.val_id.labels[static_cast<std::size_t>(at_val++)] = k;
            } else {
                out.test_id.features.row(at_test) = row;
                out.test_id.labels[static_cast<std::size_t>(at_test++)] = k;
            }
        }
    }

    const double ood_radius = 3.0 * cfg.mean_radius;
    Vec shifted_center;
    if (cfg.ood_mode == OodMode::shifted_cluster) {
        shifted_center = ood_radius * unit_direction(cfg.dim, ood_rng);
    }
    auto fill_ood = [&](FeatureBank& b) {
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            if (cfg.ood_mode == OodMode::shifted_cluster) {
                Vec row = shifted_center;
                for (Eigen::Index j = 0; j < cfg.dim; ++j) {
                    row[j] += cfg.within_std * ood_rng.normal();
                }
                b.features.row(i) = row;
            } else {
                b.features.row(i) = ood_radius * unit_direction(cfg.dim, ood_rng);
            }
        }
    };
    fill_ood(out.val_ood);
    fill_ood(out.test_ood);
    return out;
}

void write_dataset(const SynthData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_feature_file_binary(data.train_id, (base / files::kTrainId).string());
    write_feature_file_binary(data.val_id, (base / files::kValId).string());
    write_feature_file_binary(data.val_ood, (base / files::kValOod).string());
    write_feature_file_binary(data.test_id, (base / files::kTestId).string());
    write_feature_file_binary(data.test_ood, (base / files::kTestOod).string());
}

SynthData read_dataset(const std::string& dir) {
    const std::filesystem::path base(dir);
    SynthData d;
    d.train_id = read_feature_file((base / files::kTrainId).string());
    d.val_id = read_feature_file((base / files::kValId).string());
    d.val_ood = read_feature_file((base / files::kValOod).string());
    d.test_id = read_feature_file((base / files::kTestId).string());
    d.test_ood = read_feature_file((base / files::kTestOod).string());
    return d;
}

void TrainConfig::validate() const {
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(lr_max >= 0.0) || !std::isfinite(lr_max)) {
        throw ConfigError("lr_max must be a nonnegative finite real");
    }
    if (warmup_iters < 0 || warmup_iters >= iterations) {
        throw ConfigError("warmup_iters must be in [0, iterations)");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw ConfigError("weight_decay must be a nonnegative finite real");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("tau must be a positive finite real");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha must be a nonnegative finite real");
    }
    if (!(jitter_scale >= 0.0) || !std::isfinite(jitter_scale)) {
        throw ConfigError("jitter_scale must be a nonnegative finite real");
    }
    if (embed_dim < 1) throw ConfigError("embed_dim must be at least 1");
    if (hidden_dim < 0) throw ConfigError("hidden_dim must be nonnegative (0 = automatic)");
    if (freeze_head_after < -1) throw ConfigError("freeze_head_after must be >= -1");
    if (classifier_iters < 0) throw ConfigError("classifier_iters must be nonnegative");
    if (!(classifier_lr > 0.0) || !std::isfinite(classifier_lr)) {
        throw ConfigError("classifier_lr must be a positive finite real");
    }
    outliers.validate();
}

namespace {

double cfg_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* end = value.data() + value.size();
    auto [p, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw ConfigError("config key '" + key + "': expected a real number, got '" + value +
                          "'");
    }
    return v;
}

long long cfg_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const char* end = value.data() + value.size();
    auto [p, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
    return v;
}

std::uint64_t cfg_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const char* end = value.data() + value.size();
    auto [p, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" +
                          value + "'");
    }
    return v;
}

// Applies one key, returning false for keys this format does not know.
bool apply_key(Config& cfg, const std::string& key, const std::string& value) {
    TrainConfig& t = cfg.train;
    SynthDataConfig& d = cfg.data;
    if (key == "iterations") t.iterations = cfg_int(key, value);
    else if (key == "batch_size") t.batch_size = cfg_int(key, value);
    else if (key == "lr_max") t.lr_max = cfg_real(key, value);
    else if (key == "warmup_iters") t.warmup_iters = cfg_int(key, value);
    else if (key == "weight_decay") t.weight_decay = cfg_real(key, value);
    else if (key == "beta1") t.beta1 = cfg_real(key, value);
    else if (key == "beta2") t.beta2 = cfg_real(key, value);
    else if (key == "epsilon") t.epsilon = cfg_real(key, value);
    else if (key == "tau") t.tau = cfg_real(key, value);
    else if (key == "alpha") t.alpha = cfg_real(key, value);
    else if (key == "seed") t.seed = cfg_u64(key, value);
    else if (key == "view_mode") {
        if (value == "jitter") t.view_mode = ViewMode::two_view_jitter;
        else if (value == "single") t.view_mode = ViewMode::single_view;
        else {
            throw ConfigError("config key 'view_mode': expected 'jitter' or 'single', got '" +
                              value + "'");
        }
    } else if (key == "jitter_scale") t.jitter_scale = cfg_real(key, value);
    else if (key == "embed_dim") t.embed_dim = cfg_int(key, value);
    else if (key == "hidden_dim") t.hidden_dim = cfg_int(key, value);
    else if (key == "freeze_head_after") t.freeze_head_after = cfg_int(key, value);
    else if (key == "classifier_iters") t.classifier_iters = cfg_int(key, value);
    else if (key == "classifier_lr") t.classifier_lr = cfg_real(key, value);
    else if (key == "sigma") t.outliers.sigma = cfg_real(key, value);
    else if (key == "seeds_per_batch") t.outliers.seeds_per_batch = cfg_int(key, value);
    else if (key == "candidates_per_seed") t.outliers.candidates_per_seed = cfg_int(key, value);
    else if (key == "keep_per_seed") t.outliers.keep_per_seed = cfg_int(key, value);
    else if (key == "start_iteration") t.outliers.start_iteration = cfg_int(key, value);
    else if (key == "n_classes") d.n_classes = static_cast<int>(cfg_int(key, value));
    else if (key == "dim") d.dim = cfg_int(key, value);
    else if (key == "per_class") d.per_class = cfg_int(key, value);
    else if (key == "mean_radius") d.mean_radius = cfg_real(key, value);
    else if (key == "within_std") d.within_std = cfg_real(key, value);
    else if (key == "ood_mode") {
        if (value == "shifted-cluster") d.ood_mode = OodMode::shifted_cluster;
        else if (value == "uniform-shell") d.ood_mode = OodMode::uniform_shell;
        else {
            throw ConfigError(
                "config key 'ood_mode': expected 'shifted-cluster' or 'uniform-shell', got '" +
                value + "'");
        }
    } else if (key == "ood_count") d.ood_count = cfg_int(key, value);
    else if (key == "data_seed") d.seed = cfg_u64(key, value);
    else return false;
    return true;
}

} // namespace

void apply_override(Config& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "': expected key=value");
    }
    const std::string key(trim(std::string_view(assignment).substr(0, eq)));
    const std::string value(trim(std::string_view(assignment).substr(eq + 1)));
    if (!apply_key(cfg, key, value)) {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

Config parse_config(const std::string& path, const std::vector<std::string>& overrides) {
    Config cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config '" + path + "'");
        std::string line;
        std::size_t lineno = 0;
        std::vector<std::string> unknown;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string_view body = trim(line);
            if (body.empty()) continue;
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("config '" + path + "' line " + std::to_string(lineno) +
                                  ": expected key=value");
            }
            const std::string key(trim(body.substr(0, eq)));
            const std::string value(trim(body.substr(eq + 1)));
            if (!apply_key(cfg, key, value)) {
                unknown.push_back(key);
            }
        }
        if (!unknown.empty()) {
            std::string msg = "unknown config keys:";
            for (const std::string& k : unknown) msg += " '" + k + "'";
            throw ConfigError(msg);
        }
    }
    for (const std::string& assignment : overrides) {
        apply_override(cfg, assignment);
    }
    cfg.train.validate();
    cfg.data.validate();
    return cfg;
}

} // namespace hod
