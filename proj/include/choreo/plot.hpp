#pragma once

#include "choreo/motion.hpp"

#include <string>
#include <vector>

namespace choreo::plot {

/// Top-down (x-z) root paths, one polyline per dancer, with optional seam
/// frames marked on every path.
std::string trajectories_svg(const motion::GroupMotion& motion, const std::vector<int>& seam_frames = {});

/// Per-frame max root displacement across dancers as a line chart; seam
/// frames are drawn as vertical markers.
std::string displacement_svg(const motion::GroupMotion& motion, const std::vector<int>& seam_frames = {});

}  // namespace choreo::plot
