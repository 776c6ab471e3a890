#pragma once

#include "nrkd/features.hpp"
#include "nrkd/plugin.hpp"
#include "nrkd/synth.hpp"
#include "nrkd/warp.hpp"

#include <vector>

namespace nrkd {

struct PeakEntry {
  int x = 0;
  int y = 0;
  double weight = 0.0;
};

// Matching heatmap: [0,1] raster rendered from weighted peaks with a 3x3
// Gaussian (sigma 1.5, peak value preserved at the center, max-composited).
struct MatchingHeatmap {
  Image values;
  std::vector<PeakEntry> peaks;
};

// Correct-match pixel locations on each side of one matching round.
struct CorrectMatchSet {
  std::vector<PeakEntry> loc_a;  // weight field unused here, kept at 1
  std::vector<PeakEntry> loc_b;
};

// A ratio-surviving pair (i, j) is correct iff |g(kps_a[i]) - kps_b[j]| <= tol.
CorrectMatchSet correct_matches(const MatchSet& matches, const std::vector<Keypoint>& kps_a,
                                const std::vector<Keypoint>& kps_b, const CompositeWarp& g,
                                double tol = 3.0);

Image render_peaks(const std::vector<PeakEntry>& peaks, Eigen::Index h, Eigen::Index w,
                   double sigma = 1.5);

enum class MhWeighting { paper, equal };

struct HeatmapConfig {
  double ratio = 0.8;
  double tol = 3.0;
  double budget_frac = 0.02;  // k = frac * H * W
  int max_keypoints = 0;      // optional hard cap on k (0 = none)
  double sigma = 1.5;
  MhWeighting weighting = MhWeighting::paper;
};

struct TripletHeatmaps {
  MatchingHeatmap mh_b, mh_bp;
  MatchingHeatmap mh_a;  // anchor map, before transport
  int n_matches_ab = 0, n_matches_abp = 0;
  int n_correct_ab = 0, n_correct_abp = 0;
};

// Ground-truth construction over a triplet: detect, describe, ratio-match
// A<->B and A<->B', keep the 3 px-correct locations, average the binary maps
// (M_a = (M_a1 + M_a2)/2, M_b = (g(M_a) + M_b1)/2, likewise B'), and render.
// Throws EmptyHeatmap when no correct match exists anywhere.
TripletHeatmaps build_triplet_heatmaps(const TrainingTriplet& triplet, const PluginSpec& plugin,
                                       const HeatmapConfig& cfg);

// Same, but with detection/description already done (one set per image).
TripletHeatmaps build_triplet_heatmaps_from_features(
    const DescriptorSet& feat_a, const DescriptorSet& feat_b, const DescriptorSet& feat_bp,
    const CompositeWarp& g, const CompositeWarp& gp, const Mask& valid_b, const Mask& valid_bp,
    Eigen::Index h, Eigen::Index w, const HeatmapConfig& cfg);

// Persisted form: 16-bit PNG (value = round(65535 * v)) plus a JSON sidecar
// with the peak list.
void save_heatmap(const std::string& png_path, const std::string& json_path,
                  const MatchingHeatmap& mh);
MatchingHeatmap load_heatmap(const std::string& png_path, const std::string& json_path);

}  // namespace nrkd
