#include "nrkd/features.hpp"

#include "nrkd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nrkd {

std::vector<Keypoint> detect_builtin(const Image& image, int k) {
  const Eigen::Index h = image.rows(), w = image.cols();
  if (k < 1 || h < 5 || w < 5) return {};

  // central-difference gradients
  Image gx = Image::Zero(h, w), gy = Image::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) gx(y, x) = 0.5f * (image(y, x + 1) - image(y, x - 1));
  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) gy(y, x) = 0.5f * (image(y + 1, x) - image(y - 1, x));

  const Image xx = gx * gx, yy = gy * gy, xy = gx * gy;

  // 3x3 box window structure tensor, then the smaller eigenvalue
  Image score = Image::Zero(h, w);
  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (Eigen::Index dy = -1; dy <= 1; ++dy)
        for (Eigen::Index dx = -1; dx <= 1; ++dx) {
          a += xx(y + dy, x + dx);
          c += yy(y + dy, x + dx);
          b += xy(y + dy, x + dx);
        }
      const double half = 0.5 * (a + c);
      const double root = std::sqrt(std::max(0.25 * (a - c) * (a - c) + b * b, 0.0));
      score(y, x) = float(half - root);
    }

  // 3x3 strict local maxima; ties keep the lexicographically smallest pixel
  std::vector<Keypoint> cands;
  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const float s = score(y, x);
      if (!(s > 1e-12f)) continue;
      bool maximal = true;
      for (Eigen::Index dy = -1; dy <= 1 && maximal; ++dy)
        for (Eigen::Index dx = -1; dx <= 1 && maximal; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const float n = score(y + dy, x + dx);
          if (n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0)))) maximal = false;
        }
      if (maximal) cands.push_back({double(x), double(y), double(s)});
    }

  std::sort(cands.begin(), cands.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (int(cands.size()) > k) cands.resize(std::size_t(k));
  return cands;
}

DescriptorSet describe_builtin(const Image& image, const std::vector<Keypoint>& keypoints) {
  constexpr int kPatch = 16;
  constexpr int kBefore = kPatch / 2 - 1;  // rows [cy-7, cy+8]
  constexpr int kAfter = kPatch / 2;
  const Eigen::Index h = image.rows(), w = image.cols();

  DescriptorSet out;
  std::vector<Eigen::VectorXf> rows;
  for (const Keypoint& kp : keypoints) {
    const Eigen::Index cx = Eigen::Index(std::llround(kp.x));
    const Eigen::Index cy = Eigen::Index(std::llround(kp.y));
    if (cx - kBefore < 0 || cx + kAfter >= w || cy - kBefore < 0 || cy + kAfter >= h) continue;

    Eigen::VectorXf v(kPatch * kPatch);
    Eigen::Index i = 0;
    for (Eigen::Index y = cy - kBefore; y <= cy + kAfter; ++y)
      for (Eigen::Index x = cx - kBefore; x <= cx + kAfter; ++x) v(i++) = image(y, x);

    const float mean = v.mean();
    v.array() -= mean;
    const float sd = std::sqrt(v.squaredNorm() / float(v.size()));
    if (sd < 1e-8f) continue;  // flat patch carries no signal
    v /= sd;
    v /= v.norm();
    out.keypoints.push_back(kp);
    rows.push_back(std::move(v));
  }
  out.vectors.resize(Eigen::Index(rows.size()), kPatch * kPatch);
  for (std::size_t r = 0; r < rows.size(); ++r) out.vectors.row(Eigen::Index(r)) = rows[r];
  return out;
}

MatchSet match_ratio(const DescriptorSet& da, const DescriptorSet& db, double ratio,
                     bool mutual) {
  MatchSet out;
  const Eigen::Index na = da.count(), nb = db.count();
  if (na == 0 || nb == 0) return out;
  if (da.dim() != db.dim()) throw ShapeError("descriptor dimensions differ");

  // squared distances via double-precision Gram products
  const Eigen::MatrixXd a = da.vectors.cast<double>();
  const Eigen::MatrixXd b = db.vectors.cast<double>();
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2(na, nb);
  d2.noalias() = -2.0 * a * b.transpose();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();

  std::vector<int> best_for_b;
  if (mutual) {
    best_for_b.assign(std::size_t(nb), -1);
    for (Eigen::Index j = 0; j < nb; ++j) {
      Eigen::Index arg = 0;
      d2.col(j).minCoeff(&arg);  // first minimum wins ties
      best_for_b[std::size_t(j)] = int(arg);
    }
  }

  for (Eigen::Index i = 0; i < na; ++i) {
    int j1 = -1, j2 = -1;
    double b1 = 0, b2 = 0;
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double d = d2(i, j);
      if (j1 < 0 || d < b1) {
        j2 = j1;
        b2 = b1;
        j1 = int(j);
        b1 = d;
      } else if (j2 < 0 || d < b2) {
        j2 = int(j);
        b2 = d;
      }
    }
    const double d1 = std::sqrt(std::max(b1, 0.0));
    Match m;
    m.index_a = int(i);
    m.index_b = j1;
    m.distance = d1;
    if (j2 < 0) {
      // single candidate: the ratio test is defined as passed
      m.ratio = 0.0;
    } else {
      const double d2nd = std::sqrt(std::max(b2, 0.0));
      m.ratio = d2nd > 0.0 ? d1 / d2nd : (d1 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (!(m.ratio < ratio)) continue;
    }
    if (mutual && best_for_b[std::size_t(j1)] != int(i)) continue;
    out.pairs.push_back(m);
  }
  return out;
}

}  // namespace nrkd
