#include "hod/bank.hpp"

#include <string>

namespace hod {

EmbeddingBank::EmbeddingBank(std::vector<LorentzPoint> points, std::vector<int> labels,
                             Curvature c)
    : points_(std::move(points)), labels_(std::move(labels)), c_(c) {
    if (points_.empty()) {
        throw DataError("EmbeddingBank: need at least one point");
    }
    if (points_.size() != labels_.size()) {
        throw DataError("EmbeddingBank: " + std::to_string(points_.size()) + " points but " +
                        std::to_string(labels_.size()) + " labels");
    }
    const Eigen::Index n = points_.front().dim();
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_[i].dim() != n) {
            throw DimensionError("EmbeddingBank: point " + std::to_string(i) + " has dimension " +
                                 std::to_string(points_[i].dim()) + ", expected " +
                                 std::to_string(n));
        }
        // The constraint residual of a reconstructed time coordinate scales
        // with c*t^2, so the tolerance has to as well.
        const double t = points_[i].time();
        const double tol = 1e-9 * std::max(1.0, c_.value() * t * t);
        if (manifold_violation(points_[i], c_) > tol) {
            throw NumericError("EmbeddingBank: point " + std::to_string(i) +
                               " is off the manifold");
        }
    }
}

} // namespace hod
