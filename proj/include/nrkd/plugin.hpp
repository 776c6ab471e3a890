#pragma once

#include "nrkd/features.hpp"

#include <string>

namespace nrkd {

// Exchange format (bit-exact contract):
//   keypoints: CSV rows "x,y,score" with 6-decimal fixed precision
//   descriptors: little-endian binary, magic "NRKD", u32 n, u32 d,
//                then n*d float32 row-major
void write_keypoints_csv(const std::string& path, const std::vector<Keypoint>& kps);
std::vector<Keypoint> read_keypoints_csv(const std::string& path);

void write_descriptors_nrkd(const std::string& path, const DescriptorSet& ds);
// Reads vectors only; caller pairs them with the CSV keypoints.
Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
read_descriptors_nrkd(const std::string& path);

// External feature extractors are command templates with the placeholders
// {image}, {k}, {kpts}, {desc}. The command must write the two exchange
// files; keypoints out of bounds are a protocol error, non-unit descriptor
// rows are renormalized with a warning.
struct PluginSpec {
  enum class Kind { builtin, external };
  Kind kind = Kind::builtin;
  std::string name = "builtin";
  std::string command;       // external only
  double timeout_sec = 60.0;
  std::string work_dir;      // defaults to $NRKD_CACHE or a temp directory
};

// Parses "name=command template" (the --plugin flag payload).
PluginSpec parse_plugin_flag(const std::string& flag);

struct PluginResult {
  std::vector<Keypoint> keypoints;
  DescriptorSet descriptors;
};

PluginResult run_external_plugin(const PluginSpec& spec, const std::string& image_path, int k);

// Uniform front door: builtin detect+describe, or the external protocol.
// Image content and path must refer to the same raster.
PluginResult extract_features(const PluginSpec& spec, const Image& image,
                              const std::string& image_path, int k);

}  // namespace nrkd
