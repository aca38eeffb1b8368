#pragma once

#include <optional>
#include <string>

#include "hod/classifier.hpp"
#include "hod/head.hpp"

namespace hod {

/**
 * Everything needed to score with a trained model: the projection head with
 * its curvature parameter, the per-class hyperplanes (may be empty when no
 * classifier was fitted) and the binary ID/outlier plane (present when
 * training used the uncertainty term).
 */
struct Checkpoint {
    HeadParams head;
    ClassifierParams classifier;
    std::optional<Hyperplane> binary_plane;
};

/**
 * Binary format, all integers and floats little-endian:
 *   magic "HODP", version u32 (currently 1), feature dim u32, embed dim u32,
 *   layer count u32, then per layer out u32, in u32, row-major f64 weights,
 *   f64 biases; then curvature_param f64, class plane count u32, per plane
 *   offset f64 + orientation f64s, and a trailing u8 flag + plane for the
 *   binary separator.
 */
void save_checkpoint(const Checkpoint& ck, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

} // namespace hod
