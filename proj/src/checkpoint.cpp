#include "hod/checkpoint.hpp"

#include <cstring>
#include <string>

#include "wire.hpp"

namespace hod {

namespace {

constexpr char kMagic[4] = {'H', 'O', 'D', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_plane(wire::Writer& w, const Hyperplane& h) {
    w.f64(h.offset);
    for (Eigen::Index i = 0; i < h.orientation.size(); ++i) w.f64(h.orientation[i]);
}

Hyperplane read_plane(wire::Reader& r, Eigen::Index n) {
    Hyperplane h;
    h.offset = r.f64();
    h.orientation.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) h.orientation[i] = r.f64();
    return h;
}

} // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    if (ck.head.layers.empty()) {
        throw DataError("save_checkpoint: head has no layers");
    }
    const Eigen::Index n = ck.head.embed_dim();
    for (const Hyperplane& h : ck.classifier.planes) {
        if (h.orientation.size() != n) {
            throw DimensionError("save_checkpoint: class plane dimension mismatch");
        }
    }
    if (ck.binary_plane && ck.binary_plane->orientation.size() != n) {
        throw DimensionError("save_checkpoint: binary plane dimension mismatch");
    }

    wire::Writer w(path);
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(ck.head.feature_dim()));
    w.u32(static_cast<std::uint32_t>(n));
    w.u32(static_cast<std::uint32_t>(ck.head.layers.size()));
    for (const AffineLayer& layer : ck.head.layers) {
        w.u32(static_cast<std::uint32_t>(layer.weight.rows()));
        w.u32(static_cast<std::uint32_t>(layer.weight.cols()));
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                w.f64(layer.weight(i, j));
            }
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) w.f64(layer.bias[i]);
    }
    w.f64(ck.head.curvature_param);
    w.u32(static_cast<std::uint32_t>(ck.classifier.planes.size()));
    for (const Hyperplane& h : ck.classifier.planes) write_plane(w, h);
    w.u8(ck.binary_plane ? 1 : 0);
    if (ck.binary_plane) write_plane(w, *ck.binary_plane);
}

Checkpoint load_checkpoint(const std::string& path) {
    wire::Reader r(path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("'" + path + "': not a checkpoint file (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw DataError("'" + path + "': unsupported checkpoint version " +
                        std::to_string(version));
    }
    const auto e = static_cast<Eigen::Index>(r.u32());
    const auto n = static_cast<Eigen::Index>(r.u32());
    const std::uint32_t layer_count = r.u32();
    if (layer_count == 0) {
        throw DataError("'" + path + "': checkpoint has no layers");
    }

    Checkpoint ck;
    Eigen::Index expect_in = e;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        const auto rows = static_cast<Eigen::Index>(r.u32());
        const auto cols = static_cast<Eigen::Index>(r.u32());
        if (cols != expect_in) {
            throw DataError("'" + path + "': layer " + std::to_string(l) + " expects input " +
                            std::to_string(cols) + " but the previous layer produces " +
                            std::to_string(expect_in));
        }
        AffineLayer layer;
        layer.weight.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) layer.weight(i, j) = r.f64();
        }
        layer.bias.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) layer.bias[i] = r.f64();
        ck.head.layers.push_back(std::move(layer));
        expect_in = rows;
    }
    if (expect_in != n) {
        throw DataError("'" + path + "': last layer produces " + std::to_string(expect_in) +
                        " but the header says the embedding dimension is " + std::to_string(n));
    }
    ck.head.curvature_param = r.f64();

    const std::uint32_t n_planes = r.u32();
    for (std::uint32_t i = 0; i < n_planes; ++i) {
        ck.classifier.planes.push_back(read_plane(r, n));
    }
    if (r.u8() != 0) {
        ck.binary_plane = read_plane(r, n);
    }
    r.expect_eof();
    return ck;
}

} // namespace hod
