#pragma once

#include "nrkd/core.hpp"

#include <vector>

namespace nrkd {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

// Keypoints plus their unit-norm float descriptors, one row per keypoint.
struct DescriptorSet {
  std::vector<Keypoint> keypoints;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vectors;

  Eigen::Index count() const { return Eigen::Index(keypoints.size()); }
  Eigen::Index dim() const { return vectors.cols(); }
};

struct Match {
  int index_a = -1;
  int index_b = -1;
  double distance = 0.0;
  double ratio = 0.0;
};

struct MatchSet {
  std::vector<Match> pairs;
};

// Keypoint budget rule used for ground-truth generation.
inline int keypoint_budget(Eigen::Index h, Eigen::Index w, double frac = 0.02) {
  return std::max(1, int(std::llround(frac * double(h) * double(w))));
}

// Smaller-eigenvalue-of-structure-tensor corner detector with 3x3 local
// maximum suppression; returns up to k keypoints sorted by score descending.
std::vector<Keypoint> detect_builtin(const Image& image, int k);

// 16x16 patch descriptor: z-normalized then L2-normalized, d = 256.
// Keypoints too close to the border (or on flat patches) are dropped.
DescriptorSet describe_builtin(const Image& image, const std::vector<Keypoint>& keypoints);

// One-directional nearest-neighbor matching with Lowe's ratio test.
// mutual = true additionally requires a to be b's nearest neighbor.
MatchSet match_ratio(const DescriptorSet& da, const DescriptorSet& db, double ratio,
                     bool mutual = false);

}  // namespace nrkd
