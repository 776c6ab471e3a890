#include "nrkd/warp.hpp"

#include "nrkd/io/formats.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace nrkd;

namespace {

Points2 unit_square() {
  Points2 p(2, 4);
  p << 0, 1, 0, 1,
       0, 0, 1, 1;
  return p;
}

// Random well-separated points in [0, span]^2.
Points2 scattered_points(int n, double span, Rng& rng) {
  Points2 p(2, n);
  int placed = 0;
  while (placed < n) {
    const double x = rng.uniform(0.0, span), y = rng.uniform(0.0, span);
    bool ok = true;
    for (int i = 0; i < placed && ok; ++i)
      ok = std::hypot(p(0, i) - x, p(1, i) - y) > span / 100.0;
    if (!ok) continue;
    p(0, placed) = x;
    p(1, placed) = y;
    ++placed;
  }
  return p;
}

}  // namespace

TEST_CASE("tps_kernel limit and landmarks") {
  CHECK(tps_kernel(0.0) == 0.0);
  CHECK(tps_kernel(1.0) == 0.0);
  const double e = std::exp(1.0);
  CHECK(tps_kernel(e) == doctest::Approx(e * e).epsilon(1e-12));
  // squared-distance form agrees with the plain form
  for (double r : {0.1, 0.5, 2.0, 17.3})
    CHECK(tps_kernel_sq(r * r) == doctest::Approx(tps_kernel(r)).epsilon(1e-12));
}

TEST_CASE("fit_tps identity and translation have zero bending weights") {
  const Points2 sq = unit_square();
  TpsWarp id = fit_tps(sq, sq);
  CHECK((id.affine - (Eigen::Matrix<double, 2, 3>() << 1, 0, 0, 0, 1, 0).finished())
            .cwiseAbs()
            .maxCoeff() < 1e-9);
  CHECK(id.weights.cwiseAbs().maxCoeff() < 1e-9);

  Points2 shifted = sq;
  shifted.row(0).array() += 5.0;
  TpsWarp tr = fit_tps(sq, shifted);
  CHECK(tr.affine(0, 2) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(tr.weights.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit_tps interpolates random correspondences exactly") {
  Rng rng(7);
  const Points2 src = scattered_points(16, 100.0, rng);
  Points2 dst(2, 16);
  for (int i = 0; i < 16; ++i) {
    dst(0, i) = src(0, i) + rng.uniform(-10.0, 10.0);
    dst(1, i) = src(1, i) + rng.uniform(-10.0, 10.0);
  }
  const TpsWarp w = fit_tps(src, dst, 0.0);
  const Points2 mapped = apply_warp(w, src);
  CHECK((mapped - dst).colwise().norm().maxCoeff() < 1e-6);

  // TPS side conditions
  CHECK(std::abs(w.weights.col(0).sum()) < 1e-8);
  CHECK(std::abs(w.weights.col(1).sum()) < 1e-8);
  CHECK(std::abs((src.row(0) * w.weights.col(0))(0)) < 1e-6);
  CHECK(std::abs((src.row(1) * w.weights.col(1))(0)) < 1e-6);
}

TEST_CASE("fit_tps affine reproduction leaves weights at zero") {
  Rng rng(21);
  const Points2 src = scattered_points(24, 50.0, rng);
  Eigen::Matrix2d m;
  m << 1.3, -0.2, 0.4, 0.9;
  const Eigen::Vector2d t(3.0, -7.0);
  Points2 dst = (m * src).colwise() + t;
  const TpsWarp w = fit_tps(src, dst);
  CHECK(w.weights.norm() < 1e-6);
  CHECK((w.affine.leftCols<2>() - m).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_tps rejects degenerate configurations") {
  Points2 collinear(2, 4);
  collinear << 0, 1, 2, 3,
               0, 1, 2, 3;
  CHECK_THROWS_AS(fit_tps(collinear, collinear), SingularSystem);

  Points2 dup(2, 3);
  dup << 0, 0, 1,
         0, 0, 1;
  CHECK_THROWS_AS(fit_tps(dup, dup), SingularSystem);
}

TEST_CASE("regularized fit smooths instead of interpolating") {
  Rng rng(3);
  const Points2 src = scattered_points(12, 40.0, rng);
  Points2 dst = src;
  for (int i = 0; i < 12; ++i) dst(0, i) += rng.uniform(-3.0, 3.0);
  const TpsWarp exact = fit_tps(src, dst, 0.0);
  const TpsWarp smooth = fit_tps(src, dst, 10.0);
  const double res_exact = (apply_warp(exact, src) - dst).colwise().norm().maxCoeff();
  const double res_smooth = (apply_warp(smooth, src) - dst).colwise().norm().maxCoeff();
  CHECK(res_exact < 1e-6);
  CHECK(res_smooth > res_exact);
  CHECK(smooth.weights.norm() < exact.weights.norm());
}

TEST_CASE("apply_warp identity and composite order") {
  const CompositeWarp id = CompositeWarp::identity();
  Points2 p(2, 1);
  p << 37.5, 12.0;
  const Points2 q = apply_warp(id, p);
  CHECK(q(0, 0) == doctest::Approx(37.5));
  CHECK(q(1, 0) == doctest::Approx(12.0));

  // composite equals homography-then-tps point by point
  Rng rng(11);
  WarpConfig cfg;
  cfg.width = 200;
  cfg.height = 150;
  CompositeWarp w;
  w.homography = sample_random_homography(cfg, rng);
  w.tps = sample_random_tps(cfg, rng);
  Points2 grid(2, 100);
  for (int i = 0; i < 100; ++i) {
    grid(0, i) = (i % 10) * 20.0;
    grid(1, i) = (i / 10) * 15.0;
  }
  const Points2 direct = apply_warp(w, grid);
  const Points2 by_hand = apply_warp(w.tps, apply_warp(w.homography, grid));
  CHECK((direct - by_hand).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("homography divide by zero is reported") {
  Homography h;
  h.matrix << 1, 0, 0,
              0, 1, 0,
              -1, 0, 1;  // sends x = 1 to infinity
  Points2 p(2, 1);
  p << 1.0, 0.5;
  CHECK_THROWS_AS(apply_warp(h, p), ProjectiveDivideByZero);
}

TEST_CASE("sample_random_homography respects the corner bound") {
  WarpConfig cfg;
  cfg.width = 320;
  cfg.height = 240;
  cfg.max_corner_shift = 0.05;
  const double bound = 0.05 * std::hypot(319.0, 239.0) + 1e-9;
  Rng rng(99);
  Points2 corners(2, 4);
  corners << 0, 319, 319, 0,
             0, 0, 239, 239;
  for (int trial = 0; trial < 20; ++trial) {
    const Homography h = sample_random_homography(cfg, rng);
    const Points2 mapped = apply_warp(h, corners);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(mapped(0, i) - corners(0, i)) <= bound);
      CHECK(std::abs(mapped(1, i) - corners(1, i)) <= bound);
    }
  }

  cfg.max_corner_shift = 0.0;
  const Homography id = sample_random_homography(cfg, rng);
  CHECK((id.matrix - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random warps are deterministic under a fixed seed") {
  WarpConfig cfg;
  cfg.width = 128;
  cfg.height = 96;
  Rng a(1234), b(1234);
  const Homography ha = sample_random_homography(cfg, a);
  const Homography hb = sample_random_homography(cfg, b);
  CHECK((ha.matrix - hb.matrix).cwiseAbs().maxCoeff() == 0.0);
  const TpsWarp ta = sample_random_tps(cfg, a);
  const TpsWarp tb = sample_random_tps(cfg, b);
  CHECK((ta.weights - tb.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ta.affine - tb.affine).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_random_tps: zero sigma is the identity warp") {
  WarpConfig cfg;
  cfg.tps_sigma = 0.0;
  Rng rng(5);
  const TpsWarp w = sample_random_tps(cfg, rng);
  Points2 p(2, 3);
  p << 10, 200, 55,
       20, 100, 7;
  CHECK((apply_warp(w, p) - p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sample_random_tps displacement magnitudes follow the configured sigma") {
  WarpConfig cfg;
  cfg.width = 200;
  cfg.height = 160;
  cfg.grid = 8;
  cfg.tps_sigma = 0.03;
  const double stddev = cfg.tps_sigma * 160.0;
  Rng rng(42);
  long total = 0, within = 0;
  for (int s = 0; s < 1000; ++s) {
    const TpsWarp w = sample_random_tps(cfg, rng);
    const Points2 mapped = apply_warp(w, w.control_points);
    for (int j = 1; j < cfg.grid - 1; ++j)
      for (int i = 1; i < cfg.grid - 1; ++i) {
        const int k = j * cfg.grid + i;
        const double d = (mapped.col(k) - w.control_points.col(k)).norm();
        ++total;
        if (d <= 4.0 * stddev) ++within;
      }
  }
  CHECK(double(within) / double(total) >= 0.99);
}

TEST_CASE("warp_image identity and translation") {
  Rng rng(8);
  Image img(32, 40);
  for (Eigen::Index y = 0; y < 32; ++y)
    for (Eigen::Index x = 0; x < 40; ++x)
      img(y, x) = float(0.5 + 0.5 * std::sin(0.3 * double(x)) * std::cos(0.2 * double(y)));

  const WarpedImage same = warp_image(img, CompositeWarp::identity(), 32, 40);
  CHECK((same.image - img).abs().maxCoeff() < 1e-6f);
  CHECK(int(same.valid.minCoeff()) == 1);

  CompositeWarp shift = CompositeWarp::identity();
  shift.homography.matrix(0, 2) = 10.0;  // x_b = x_a + 10
  const WarpedImage moved = warp_image(img, shift, 32, 40);
  for (Eigen::Index x = 0; x < 10; ++x) CHECK(moved.valid(16, x) == 0);
  for (Eigen::Index x = 10; x < 40; ++x) {
    CHECK(moved.valid(16, x) == 1);
    CHECK(moved.image(16, x) == doctest::Approx(img(16, x - 10)).epsilon(1e-5));
  }
}

TEST_CASE("warp_image round trip via the swapped fit") {
  // smooth test image
  Image img(96, 128);
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x)
      img(y, x) = float(0.5 + 0.25 * std::sin(0.11 * double(x)) + 0.25 * std::cos(0.13 * double(y)));

  WarpConfig cfg;
  cfg.width = 128;
  cfg.height = 96;
  cfg.max_corner_shift = 0.0;
  cfg.tps_sigma = 0.03;
  Rng rng(17);
  const TpsWarp fwd = sample_random_tps(cfg, rng);
  CompositeWarp w = CompositeWarp::identity();
  w.tps = fwd;

  const WarpedImage warped = warp_image(img, w, 96, 128);

  CompositeWarp back = CompositeWarp::identity();
  back.tps = fit_tps(apply_warp(fwd, fwd.control_points), fwd.control_points);
  const WarpedImage restored = warp_image(warped.image, back, 96, 128);

  double err = 0.0;
  long count = 0;
  for (Eigen::Index y = 0; y < 96; ++y)
    for (Eigen::Index x = 0; x < 128; ++x)
      if (restored.valid(y, x) && warped.valid(y, x)) {
        err += std::abs(double(restored.image(y, x)) - double(img(y, x)));
        ++count;
      }
  CHECK(count > 96 * 128 / 2);
  CHECK(err / double(count) < 0.02);
}

TEST_CASE("warp json round trip") {
  Rng rng(31);
  WarpConfig cfg;
  cfg.width = 100;
  cfg.height = 80;
  const CompositeWarp w = sample_random_warp(cfg, rng);
  const CompositeWarp back = warp_from_json(warp_to_json(w));
  CHECK((w.homography.matrix - back.homography.matrix).cwiseAbs().maxCoeff() == 0.0);
  CHECK((w.tps.affine - back.tps.affine).cwiseAbs().maxCoeff() == 0.0);
  CHECK((w.tps.weights - back.tps.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((w.tps.control_points - back.tps.control_points).cwiseAbs().maxCoeff() == 0.0);
}
