#pragma once

#include "nrkd/core.hpp"
#include "nrkd/warp.hpp"

#include <string>
#include <vector>

namespace nrkd {

struct PhotometricConfig {
  double brightness = 0.1;  // additive offset drawn from [-b, b]
  double contrast = 0.2;    // scale drawn from [1-c, 1+c], centered at 0.5
  double gamma = 0.2;       // exponent drawn from [1-g, 1+g]
  double noise = 0.02;      // Gaussian noise stddev drawn from [0, n]

  static PhotometricConfig off() { return PhotometricConfig{0.0, 0.0, 0.0, 0.0}; }
};

// Brightness, contrast, gamma, then additive noise, clamped to [0, 1].
// Identity-valued parameters leave the raster untouched bit for bit.
Image photometric_augment(const Image& image, const PhotometricConfig& cfg, Rng& rng);

// Anchor A with two independently warped and augmented views.
struct TrainingTriplet {
  Image anchor;
  Image warped_1, warped_2;    // B, B'
  CompositeWarp warp_1, warp_2;  // g, g': anchor coords -> view coords
  Mask validity_1, validity_2;
  Image src_x_1, src_y_1, src_x_2, src_y_2;  // resampling source fields
};

TrainingTriplet generate_triplet(const Image& anchor, const WarpConfig& warp_cfg,
                                 const PhotometricConfig& photo_cfg, Rng& rng);

// Procedural anchor texture: low-frequency shading plus random rectangles and
// discs, lightly blurred. Gives the corner detector plenty to find while
// keeping patches discriminative.
Image synthetic_texture(Eigen::Index h, Eigen::Index w, Rng& rng);

Image gaussian_blur(const Image& img, double sigma);

// Dataset directory layout:
//   pairs/<id>/{A.png,B.png,Bp.png,g.json,gp.json,valid_B.png,valid_Bp.png}
//   manifest.json with ids, per-id seeds and the config hash.
struct SynthDatasetConfig {
  int count = 50;
  WarpConfig warp;
  PhotometricConfig photometric;
  std::uint64_t seed = 0;
  std::string image_dir;  // optional: anchors read from PNGs instead of textures
};

std::vector<std::string> write_triplet_dataset(const std::string& out_dir,
                                               const SynthDatasetConfig& cfg, int jobs = 1);

struct StoredTriplet {
  std::string id;
  Image b, bp;
  CompositeWarp g, gp;
  Mask valid_b, valid_bp;
  Image a;
};

std::vector<std::string> list_triplet_ids(const std::string& dataset_dir);
StoredTriplet load_triplet(const std::string& dataset_dir, const std::string& id);

// Evaluation-format pair dataset: <id>/{a.png,b.png,warp.json}.
std::vector<std::string> write_pair_dataset(const std::string& out_dir,
                                            const SynthDatasetConfig& cfg, int jobs = 1);

}  // namespace nrkd
