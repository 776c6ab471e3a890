#pragma once

#include "nrkd/core.hpp"
#include "nrkd/warp.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace nrkd {

// Warp <-> JSON. Layout:
//   {"homography": [9 floats row-major],
//    "tps": {"affine": [6 floats row-major 2x3],
//            "control_points": [[x, y], ...],
//            "weights": [[wx, wy], ...]}}
nlohmann::json warp_to_json(const CompositeWarp& w);
CompositeWarp warp_from_json(const nlohmann::json& j);

void save_warp_json(const std::string& path, const CompositeWarp& w);
CompositeWarp load_warp_json(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace nrkd
