#pragma once

#include "nrkd/core.hpp"
#include "nrkd/errors.hpp"

#include <optional>

namespace nrkd {

// Thin-plate spline warp f(x) = A*[x;1] + sum_i rho(|x - c_i|) * w_i with
// rho(r) = r^2 log r. Weights satisfy the usual side conditions: each
// coordinate's weight column sums to zero and is orthogonal to the control
// point coordinates, so the warp is affine at infinity.
template <typename Scalar>
struct TpsWarpT {
  Eigen::Matrix<Scalar, 2, 3> affine = Eigen::Matrix<Scalar, 2, 3>::Zero();
  Points2T<Scalar> control_points;                      // 2 x n_c
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> weights;     // n_c x 2

  static TpsWarpT identity() {
    TpsWarpT w;
    w.affine << 1, 0, 0, 0, 1, 0;
    w.control_points.resize(2, 0);
    w.weights.resize(0, 2);
    return w;
  }
};
using TpsWarp = TpsWarpT<double>;

template <typename Scalar>
struct HomographyT {
  Eigen::Matrix<Scalar, 3, 3> matrix = Eigen::Matrix<Scalar, 3, 3>::Identity();

  static HomographyT identity() { return HomographyT{}; }
};
using Homography = HomographyT<double>;

// Homography applied first, then the TPS.
template <typename Scalar>
struct CompositeWarpT {
  HomographyT<Scalar> homography;
  TpsWarpT<Scalar> tps;

  static CompositeWarpT identity() {
    return CompositeWarpT{HomographyT<Scalar>::identity(), TpsWarpT<Scalar>::identity()};
  }
};
using CompositeWarp = CompositeWarpT<double>;

// rho(r) = r^2 log r, continued with its limit value 0 at r = 0.
template <typename Scalar>
Scalar tps_kernel(Scalar r) {
  return r > Scalar(0) ? r * r * std::log(r) : Scalar(0);
}

// Same kernel on squared distances; avoids the sqrt in batched evaluation.
// r^2 log r = 0.5 * r^2 * log(r^2).
template <typename Scalar>
Scalar tps_kernel_sq(Scalar r2) {
  return r2 > Scalar(0) ? Scalar(0.5) * r2 * std::log(r2) : Scalar(0);
}

struct WarpConfig {
  int width = 400;
  int height = 300;
  double max_corner_shift = 0.1;  // fraction of the image diagonal
  int grid = 8;                   // control lattice is grid x grid
  double tps_sigma = 0.03;        // displacement std as fraction of min(H, W)
};

// Solve the regularized TPS interpolation system for src -> dst.
// regularization = 0 reproduces dst at every control point.
TpsWarp fit_tps(const Points2& src, const Points2& dst, double regularization = 0.0);

Points2 apply_warp(const TpsWarp& warp, const Points2& pts);
Points2 apply_warp(const Homography& h, const Points2& pts);
Points2 apply_warp(const CompositeWarp& w, const Points2& pts);

template <typename Warp>
Eigen::Vector2d apply_warp(const Warp& w, const Eigen::Vector2d& p) {
  Points2 pts(2, 1);
  pts.col(0) = p;
  return apply_warp(w, pts).col(0);
}

Homography sample_random_homography(const WarpConfig& cfg, Rng& rng);
TpsWarp sample_random_tps(const WarpConfig& cfg, Rng& rng);
CompositeWarp sample_random_warp(const WarpConfig& cfg, Rng& rng);

// Numerically invert the composite warp at the given target points.
// Fixed-point iteration from the homography-inverse initial guess; entries
// that fail to converge within max_iter are flagged false in the mask.
struct InverseResult {
  Points2 points;
  std::vector<std::uint8_t> converged;
};
InverseResult invert_warp(const CompositeWarp& w, const Points2& targets,
                          int max_iter = 20, double tol = 0.05);

struct WarpedImage {
  Image image;   // resampled raster, zeros outside the source
  Mask valid;    // 1 where the output pixel maps into the source image
  Image src_x;   // source coordinates used for resampling (defined where valid)
  Image src_y;
};

// Inverse-mapping resampler: for each output pixel, invert the warp and
// bilinearly sample the source. Throws NonInvertibleWarp when more than 1%
// of the output pixels fail to converge.
WarpedImage warp_image(const Image& src, const CompositeWarp& warp,
                       Eigen::Index out_h, Eigen::Index out_w);

}  // namespace nrkd
