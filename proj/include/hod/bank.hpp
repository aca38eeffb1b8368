#pragma once

#include <vector>

#include "hod/lorentz.hpp"

namespace hod {

/**
 * Immutable collection of labelled manifold points used as the reference set
 * for nearest-neighbour scoring and as the seed pool for outlier synthesis.
 * Construction checks that every point actually sits on the sheet for the
 * stated curvature.
 */
class EmbeddingBank {
public:
    EmbeddingBank(std::vector<LorentzPoint> points, std::vector<int> labels, Curvature c);

    Eigen::Index size() const { return static_cast<Eigen::Index>(points_.size()); }
    Eigen::Index dim() const { return points_.front().dim(); }

    const std::vector<LorentzPoint>& points() const { return points_; }
    const std::vector<int>& labels() const { return labels_; }
    Curvature curvature() const { return c_; }

private:
    std::vector<LorentzPoint> points_;
    std::vector<int> labels_;
    Curvature c_;
};

} // namespace hod
