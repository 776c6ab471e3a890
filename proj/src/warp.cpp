#include "nrkd/warp.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

namespace nrkd {

namespace {

// Distance matrix block rho(|p_j - c_i|) for all points against all controls,
// evaluated on squared distances.
Eigen::MatrixXd kernel_matrix(const Points2& pts, const Points2& controls) {
  const Eigen::Index m = pts.cols(), n = controls.cols();
  Eigen::MatrixXd k(m, n);
  if (n == 0) return k;
  const Eigen::RowVectorXd pn = pts.colwise().squaredNorm();
  const Eigen::RowVectorXd cn = controls.colwise().squaredNorm();
  k.noalias() = -2.0 * pts.transpose() * controls;
  k.rowwise() += cn;
  k.colwise() += pn.transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) k(i, j) = tps_kernel_sq(std::max(k(i, j), 0.0));
  return k;
}

}  // namespace

TpsWarp fit_tps(const Points2& src, const Points2& dst, double regularization) {
  const Eigen::Index n = src.cols();
  if (n < 3 || dst.cols() != n)
    throw SingularSystem("fit_tps needs at least 3 matched control points");
  if (regularization < 0.0) throw SingularSystem("negative regularization");

  // Solve in a centered, unit-scale frame; pixel-scale coordinates push the
  // raw system's condition number past the degeneracy threshold.
  const Eigen::Vector2d mu = src.rowwise().mean();
  const double sigma = (src.colwise() - mu).colwise().norm().mean();
  if (!(sigma > 0.0)) throw SingularSystem("all control points coincide");
  const Points2 srcn = (src.colwise() - mu) / sigma;

  // Augmented system [[K + lambda I, P], [P^T, 0]] [W; A^T] = [dst^T; 0]
  // with P_i = (1, x_i, y_i).
  const Eigen::Index m = n + 3;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(m, m);
  sys.topLeftCorner(n, n) = kernel_matrix(srcn, srcn);
  sys.topLeftCorner(n, n).diagonal().array() += regularization;
  Eigen::MatrixXd p(n, 3);
  p.col(0).setOnes();
  p.col(1) = srcn.row(0).transpose();
  p.col(2) = srcn.row(1).transpose();
  sys.topRightCorner(n, 3) = p;
  sys.bottomLeftCorner(3, n) = p.transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(m - 1);
  if (!(smin > 0.0) || smax / smin > 1e12)
    throw SingularSystem("degenerate control points (collinear or duplicated)");

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
  rhs.topRows(n) = dst.transpose();
  const Eigen::MatrixXd sol = svd.solve(rhs);

  // Map the normalized-frame solution back to pixel coordinates. With the
  // side conditions sum(w) = 0 and sum(c_i w_i^T) = 0, the kernel rescaling
  // rho(r/s) = rho(r)/s^2 - (log s / s^2) r^2 collapses to a constant shift
  // k = sum_i w_i |c_i|^2, so the result is again an exact TPS.
  TpsWarp warp;
  warp.control_points = src;
  warp.weights = sol.topRows(n) / (sigma * sigma);
  Eigen::Matrix2d alin;
  alin << sol(n + 1, 0), sol(n + 2, 0),
          sol(n + 1, 1), sol(n + 2, 1);
  const Eigen::Vector2d at(sol(n, 0), sol(n, 1));
  const Eigen::RowVectorXd c2 = src.colwise().squaredNorm();
  const Eigen::Vector2d k = (c2 * warp.weights).transpose();
  warp.affine.leftCols<2>() = alin / sigma;
  warp.affine.col(2) = at - alin * mu / sigma - std::log(sigma) * k;
  return warp;
}

Points2 apply_warp(const TpsWarp& warp, const Points2& pts) {
  Points2 out(2, pts.cols());
  out.noalias() = warp.affine.leftCols<2>() * pts;
  out.colwise() += warp.affine.col(2);
  if (warp.control_points.cols() > 0) {
    const Eigen::MatrixXd k = kernel_matrix(pts, warp.control_points);
    out.noalias() += (k * warp.weights).transpose();
  }
  return out;
}

Points2 apply_warp(const Homography& h, const Points2& pts) {
  Points2 out(2, pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Eigen::Vector3d q = h.matrix * pts.col(i).homogeneous();
    if (std::abs(q(2)) < 1e-12)
      throw ProjectiveDivideByZero("point maps to the line at infinity");
    out.col(i) = q.hnormalized();
  }
  return out;
}

Points2 apply_warp(const CompositeWarp& w, const Points2& pts) {
  return apply_warp(w.tps, apply_warp(w.homography, pts));
}

namespace {

// Exact 4-point homography via the 8x8 DLT system with h22 = 1.
Homography fit_homography_4pt(const Points2& src, const Points2& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src(0, i), y = src(1, i), u = dst(0, i), v = dst(1, i);
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) throw SingularSystem("degenerate corner configuration");
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
  Homography out;
  out.matrix << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return out;
}

}  // namespace

Homography sample_random_homography(const WarpConfig& cfg, Rng& rng) {
  const double w = cfg.width - 1.0, h = cfg.height - 1.0;
  const double diag = std::hypot(w, h);
  const double s = cfg.max_corner_shift * diag;
  Points2 src(2, 4), dst(2, 4);
  src << 0, w, w, 0,
         0, 0, h, h;
  for (int i = 0; i < 4; ++i) {
    dst(0, i) = src(0, i) + rng.uniform(-s, s);
    dst(1, i) = src(1, i) + rng.uniform(-s, s);
  }
  if (s == 0.0) return Homography::identity();
  return fit_homography_4pt(src, dst);
}

TpsWarp sample_random_tps(const WarpConfig& cfg, Rng& rng) {
  const int g = std::max(2, cfg.grid);
  Points2 src(2, g * g), dst(2, g * g);
  const double sx = (cfg.width - 1.0) / (g - 1.0);
  const double sy = (cfg.height - 1.0) / (g - 1.0);
  const double stddev = cfg.tps_sigma * std::min(cfg.width, cfg.height);
  Eigen::Index k = 0;
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i, ++k) {
      src(0, k) = i * sx;
      src(1, k) = j * sy;
      dst(0, k) = src(0, k) + rng.normal(0.0, stddev);
      dst(1, k) = src(1, k) + rng.normal(0.0, stddev);
    }
  }
  if (stddev == 0.0) {
    TpsWarp id = TpsWarp::identity();
    id.control_points = src;
    id.weights = Eigen::MatrixXd::Zero(src.cols(), 2);
    return id;
  }
  return fit_tps(src, dst, 0.0);
}

CompositeWarp sample_random_warp(const WarpConfig& cfg, Rng& rng) {
  CompositeWarp w;
  w.homography = sample_random_homography(cfg, rng);
  w.tps = sample_random_tps(cfg, rng);
  return w;
}

namespace {

// Value and 2x2 Jacobian of the composite warp at a single point.
void eval_with_jacobian(const CompositeWarp& w, const Eigen::Vector2d& x,
                        Eigen::Vector2d& value, Eigen::Matrix2d& jac) {
  const Eigen::Matrix3d& h = w.homography.matrix;
  const Eigen::Vector3d q = h * x.homogeneous();
  const double iw = 1.0 / q(2);
  const Eigen::Vector2d u = q.head<2>() * iw;
  Eigen::Matrix2d jh;
  jh(0, 0) = (h(0, 0) - h(2, 0) * u(0)) * iw;
  jh(0, 1) = (h(0, 1) - h(2, 1) * u(0)) * iw;
  jh(1, 0) = (h(1, 0) - h(2, 0) * u(1)) * iw;
  jh(1, 1) = (h(1, 1) - h(2, 1) * u(1)) * iw;

  const auto& tps = w.tps;
  value = tps.affine.leftCols<2>() * u + tps.affine.col(2);
  Eigen::Matrix2d jt = tps.affine.leftCols<2>();
  for (Eigen::Index i = 0; i < tps.control_points.cols(); ++i) {
    const Eigen::Vector2d d = u - tps.control_points.col(i);
    const double r2 = d.squaredNorm();
    if (r2 <= 0.0) continue;
    const double logr2 = std::log(r2);
    const Eigen::Vector2d wi = tps.weights.row(i).transpose();
    value += 0.5 * r2 * logr2 * wi;       // rho(r) = r^2 log r
    jt += wi * ((logr2 + 1.0) * d).transpose();  // d rho/d u = (2 log r + 1)(u - c)
  }
  jac = jt * jh;
}

}  // namespace

InverseResult invert_warp(const CompositeWarp& w, const Points2& targets,
                          int max_iter, double tol) {
  const Eigen::Index m = targets.cols();
  InverseResult res;
  res.points.resize(2, m);
  res.converged.assign(m, 0);

  Eigen::Matrix3d hinv;
  {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(w.homography.matrix);
    if (!lu.isInvertible()) throw NonInvertibleWarp("homography is singular");
    hinv = lu.inverse();
  }

  const double tol2 = tol * tol;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Vector2d y = targets.col(i);
    // Initial guess: homography inverse of the target (exact when the TPS
    // part is the identity).
    const Eigen::Vector3d q0 = hinv * y.homogeneous();
    if (std::abs(q0(2)) < 1e-12) {
      res.points.col(i) = y;
      continue;
    }
    Eigen::Vector2d x = q0.hnormalized();

    Eigen::Vector2d fx;
    Eigen::Matrix2d jac;
    eval_with_jacobian(w, x, fx, jac);
    Eigen::Vector2d err = fx - y;
    for (int it = 0; it < max_iter; ++it) {
      if (err.squaredNorm() <= tol2) {
        res.converged[i] = 1;
        break;
      }
      const double det = jac.determinant();
      Eigen::Vector2d step;
      if (std::abs(det) > 1e-12) {
        step(0) = (jac(1, 1) * err(0) - jac(0, 1) * err(1)) / det;
        step(1) = (jac(0, 0) * err(1) - jac(1, 0) * err(0)) / det;
      } else {
        step = err;  // gradient-free fallback where the warp folds
      }
      // Backtracking keeps the iteration stable outside the control lattice.
      double alpha = 1.0;
      for (int bt = 0; bt < 4; ++bt) {
        Eigen::Vector2d xn = x - alpha * step;
        Eigen::Vector2d fn;
        Eigen::Matrix2d jn;
        eval_with_jacobian(w, xn, fn, jn);
        const Eigen::Vector2d en = fn - y;
        if (en.squaredNorm() < err.squaredNorm() || bt == 3) {
          x = xn;
          fx = fn;
          jac = jn;
          err = en;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (!res.converged[i] && err.squaredNorm() <= tol2) res.converged[i] = 1;
    res.points.col(i) = x;
  }
  return res;
}

WarpedImage warp_image(const Image& src, const CompositeWarp& warp,
                       Eigen::Index out_h, Eigen::Index out_w) {
  if (src.size() == 0) throw ShapeError("warp_image: empty source image");
  const Eigen::Index m = out_h * out_w;
  Points2 targets(2, m);
  for (Eigen::Index y = 0; y < out_h; ++y)
    for (Eigen::Index x = 0; x < out_w; ++x) {
      targets(0, y * out_w + x) = double(x);
      targets(1, y * out_w + x) = double(y);
    }

  const InverseResult inv = invert_warp(warp, targets);
  Eigen::Index failures = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!inv.converged[i]) ++failures;
  if (double(failures) > 0.01 * double(m))
    throw NonInvertibleWarp("inverse search failed on " + std::to_string(failures) + " of " +
                            std::to_string(m) + " pixels");

  WarpedImage out;
  out.image = Image::Zero(out_h, out_w);
  out.valid = Mask::Zero(out_h, out_w);
  out.src_x = Image::Zero(out_h, out_w);
  out.src_y = Image::Zero(out_h, out_w);
  const Eigen::Index sh = src.rows(), sw = src.cols();
  for (Eigen::Index y = 0; y < out_h; ++y) {
    for (Eigen::Index x = 0; x < out_w; ++x) {
      const Eigen::Index i = y * out_w + x;
      if (!inv.converged[i]) continue;
      const double sx = inv.points(0, i), sy = inv.points(1, i);
      if (!in_bounds(sx, sy, sh, sw)) continue;
      out.image(y, x) = sample_bilinear(src, sx, sy);
      out.valid(y, x) = 1;
      out.src_x(y, x) = float(sx);
      out.src_y(y, x) = float(sy);
    }
  }
  return out;
}

}  // namespace nrkd
