#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nrkd {

// Rasters are row-major H x W arrays indexed (y, x); intensities live in [0, 1].
template <typename Scalar>
using ImageT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = ImageT<float>;
using Mask = ImageT<std::uint8_t>;

// Column-wise 2D point sets, one point per column.
template <typename Scalar>
using Points2T = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
using Points2 = Points2T<double>;

inline Mask full_mask(Eigen::Index h, Eigen::Index w) { return Mask::Constant(h, w, 1); }

template <typename Scalar>
Scalar clamp01(Scalar v) {
  return v < Scalar(0) ? Scalar(0) : (v > Scalar(1) ? Scalar(1) : v);
}

// Bilinear sample with the pixel-center convention: integer coordinates hit
// pixel centers. Out-of-range coordinates clamp to the border pixel.
template <typename Scalar>
Scalar sample_bilinear(const ImageT<Scalar>& img, double x, double y) {
  const Eigen::Index w = img.cols(), h = img.rows();
  double cx = std::min(std::max(x, 0.0), double(w - 1));
  double cy = std::min(std::max(y, 0.0), double(h - 1));
  const Eigen::Index x0 = std::min<Eigen::Index>(Eigen::Index(cx), w - 2 >= 0 ? w - 2 : 0);
  const Eigen::Index y0 = std::min<Eigen::Index>(Eigen::Index(cy), h - 2 >= 0 ? h - 2 : 0);
  const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, w - 1);
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, h - 1);
  const double fx = cx - double(x0), fy = cy - double(y0);
  const double v00 = img(y0, x0), v01 = img(y0, x1), v10 = img(y1, x0), v11 = img(y1, x1);
  return Scalar((1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11));
}

inline bool in_bounds(double x, double y, Eigen::Index h, Eigen::Index w) {
  return x >= 0.0 && y >= 0.0 && x <= double(w - 1) && y <= double(h - 1);
}

// Deterministic RNG. Distributions are hand-rolled on top of mt19937_64 so
// that streams are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // Independent child stream; (seed, id) -> stream is a fixed mixing function.
  Rng child(std::uint64_t id) const {
    std::uint64_t z = seed_mix_ + id * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

  void set_mix(std::uint64_t seed) { seed_mix_ = seed; }

  static Rng stream(std::uint64_t seed, std::uint64_t id) {
    Rng r(seed);
    r.set_mix(seed);
    return r.child(id);
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_mix_ = 0;
};

// FNV-1a over bytes; used for config hashes embedded in manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(std::uint64_t v);

}  // namespace nrkd
