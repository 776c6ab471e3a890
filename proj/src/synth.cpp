#include "nrkd/synth.hpp"

#include "nrkd/errors.hpp"
#include "nrkd/io/formats.hpp"
#include "nrkd/io/png_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <thread>

namespace fs = std::filesystem;

namespace nrkd {

Image photometric_augment(const Image& image, const PhotometricConfig& cfg, Rng& rng) {
  Image out = image;
  const double b = rng.uniform(-cfg.brightness, cfg.brightness);
  const double c = rng.uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
  const double g = rng.uniform(1.0 - cfg.gamma, 1.0 + cfg.gamma);
  const double sigma = rng.uniform(0.0, cfg.noise);

  if (b != 0.0) out += float(b);
  if (c != 1.0) out = 0.5f + (out - 0.5f) * float(c);
  if (g != 1.0) {
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      float& v = *(out.data() + i);
      v = std::pow(std::max(v, 0.0f), float(g));
    }
  }
  if (sigma > 0.0) {
    for (Eigen::Index i = 0; i < out.size(); ++i)
      *(out.data() + i) += float(rng.normal(0.0, sigma));
  }
  if (b != 0.0 || c != 1.0 || g != 1.0 || sigma > 0.0)
    out = out.cwiseMax(0.0f).cwiseMin(1.0f);
  return out;
}

TrainingTriplet generate_triplet(const Image& anchor, const WarpConfig& warp_cfg,
                                 const PhotometricConfig& photo_cfg, Rng& rng) {
  WarpConfig cfg = warp_cfg;
  cfg.height = int(anchor.rows());
  cfg.width = int(anchor.cols());

  TrainingTriplet t;
  t.anchor = anchor;
  for (int view = 0; view < 2; ++view) {
    WarpedImage warped;
    CompositeWarp warp;
    bool ok = false;
    for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
      warp = sample_random_warp(cfg, rng);
      try {
        warped = warp_image(anchor, warp, anchor.rows(), anchor.cols());
        ok = true;
      } catch (const NonInvertibleWarp&) {
        if (attempt == 4) throw;
      }
    }
    Image view_img = photometric_augment(warped.image, photo_cfg, rng);
    // Outside the source the resample is zero-filled; keep it that way.
    for (Eigen::Index i = 0; i < view_img.size(); ++i)
      if (!*(warped.valid.data() + i)) *(view_img.data() + i) = 0.0f;
    if (view == 0) {
      t.warped_1 = std::move(view_img);
      t.warp_1 = warp;
      t.validity_1 = std::move(warped.valid);
      t.src_x_1 = std::move(warped.src_x);
      t.src_y_1 = std::move(warped.src_y);
    } else {
      t.warped_2 = std::move(view_img);
      t.warp_2 = warp;
      t.validity_2 = std::move(warped.valid);
      t.src_x_2 = std::move(warped.src_x);
      t.src_y_2 = std::move(warped.src_y);
    }
  }
  return t;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  Eigen::VectorXf k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    k(i + radius) = float(std::exp(-0.5 * (i * i) / (sigma * sigma)));
  k /= k.sum();

  const Eigen::Index h = img.rows(), w = img.cols();
  Image tmp(h, w), out(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int i = -radius; i <= radius; ++i) {
        const Eigen::Index xx = std::clamp<Eigen::Index>(x + i, 0, w - 1);
        acc += k(i + radius) * img(y, xx);
      }
      tmp(y, x) = acc;
    }
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int i = -radius; i <= radius; ++i) {
        const Eigen::Index yy = std::clamp<Eigen::Index>(y + i, 0, h - 1);
        acc += k(i + radius) * tmp(yy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

Image synthetic_texture(Eigen::Index h, Eigen::Index w, Rng& rng) {
  Image img(h, w);
  // low-frequency shading
  const double fx = rng.uniform(0.5, 2.0) * 2.0 * M_PI / double(w);
  const double fy = rng.uniform(0.5, 2.0) * 2.0 * M_PI / double(h);
  const double px = rng.uniform(0.0, 2.0 * M_PI), py = rng.uniform(0.0, 2.0 * M_PI);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      img(y, x) = float(0.5 + 0.12 * std::sin(fx * x + px) + 0.12 * std::cos(fy * y + py));

  const int shapes = int(12 + rng.uniform_int(std::uint64_t(h * w / 400)));
  for (int s = 0; s < shapes; ++s) {
    const double v = rng.uniform(0.05, 0.95);
    const double cx = rng.uniform(0.0, double(w - 1));
    const double cy = rng.uniform(0.0, double(h - 1));
    if (rng.uniform() < 0.5) {
      const double rw = rng.uniform(3.0, double(w) / 6.0);
      const double rh = rng.uniform(3.0, double(h) / 6.0);
      const Eigen::Index x0 = Eigen::Index(std::max(0.0, cx - rw / 2));
      const Eigen::Index x1 = Eigen::Index(std::min(double(w - 1), cx + rw / 2));
      const Eigen::Index y0 = Eigen::Index(std::max(0.0, cy - rh / 2));
      const Eigen::Index y1 = Eigen::Index(std::min(double(h - 1), cy + rh / 2));
      for (Eigen::Index y = y0; y <= y1; ++y)
        for (Eigen::Index x = x0; x <= x1; ++x) img(y, x) = float(v);
    } else {
      const double r = rng.uniform(2.0, double(std::min(h, w)) / 8.0);
      const Eigen::Index x0 = Eigen::Index(std::max(0.0, cx - r)), x1 = Eigen::Index(std::min(double(w - 1), cx + r));
      const Eigen::Index y0 = Eigen::Index(std::max(0.0, cy - r)), y1 = Eigen::Index(std::min(double(h - 1), cy + r));
      for (Eigen::Index y = y0; y <= y1; ++y)
        for (Eigen::Index x = x0; x <= x1; ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img(y, x) = float(v);
    }
  }
  img = gaussian_blur(img, 0.8);
  // keep away from the clamp rails so photometric shifts stay informative
  return (0.05f + 0.9f * img).cwiseMin(1.0f).cwiseMax(0.0f);
}

namespace {

using nlohmann::json;

void parallel_over(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<std::string> anchor_paths(const std::string& image_dir) {
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(image_dir))
    if (e.is_regular_file() && e.path().extension() == ".png") paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DatasetFormatError("no .png anchors in " + image_dir);
  return paths;
}

std::string pair_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", i);
  return buf;
}

std::uint64_t synth_config_hash(const SynthDatasetConfig& cfg) {
  json j{{"count", cfg.count},
         {"width", cfg.warp.width},
         {"height", cfg.warp.height},
         {"max_corner_shift", cfg.warp.max_corner_shift},
         {"grid", cfg.warp.grid},
         {"tps_sigma", cfg.warp.tps_sigma},
         {"brightness", cfg.photometric.brightness},
         {"contrast", cfg.photometric.contrast},
         {"gamma", cfg.photometric.gamma},
         {"noise", cfg.photometric.noise},
         {"seed", cfg.seed}};
  return fnv1a(j.dump());
}

Image anchor_for(const SynthDatasetConfig& cfg, const std::vector<std::string>& anchors, int i,
                 Rng& rng) {
  if (!anchors.empty()) {
    Image img = read_png_gray(anchors[std::size_t(i) % anchors.size()]);
    if (img.rows() != cfg.warp.height || img.cols() != cfg.warp.width)
      throw DatasetFormatError("anchor size mismatch: " + anchors[std::size_t(i) % anchors.size()]);
    return img;
  }
  return synthetic_texture(cfg.warp.height, cfg.warp.width, rng);
}

}  // namespace

std::vector<std::string> write_triplet_dataset(const std::string& out_dir,
                                               const SynthDatasetConfig& cfg, int jobs) {
  fs::create_directories(fs::path(out_dir) / "pairs");
  std::vector<std::string> anchors;
  if (!cfg.image_dir.empty()) anchors = anchor_paths(cfg.image_dir);

  std::vector<std::string> ids(std::size_t(cfg.count));
  parallel_over(cfg.count, jobs, [&](int i) {
    Rng rng = Rng::stream(cfg.seed, std::uint64_t(i));
    const Image anchor = anchor_for(cfg, anchors, i, rng);
    const TrainingTriplet t = generate_triplet(anchor, cfg.warp, cfg.photometric, rng);
    const std::string id = pair_id(i);
    const fs::path dir = fs::path(out_dir) / "pairs" / id;
    fs::create_directories(dir);
    write_png_gray8((dir / "A.png").string(), t.anchor);
    write_png_gray8((dir / "B.png").string(), t.warped_1);
    write_png_gray8((dir / "Bp.png").string(), t.warped_2);
    save_warp_json((dir / "g.json").string(), t.warp_1);
    save_warp_json((dir / "gp.json").string(), t.warp_2);
    write_png_mask((dir / "valid_B.png").string(), t.validity_1);
    write_png_mask((dir / "valid_Bp.png").string(), t.validity_2);
    ids[std::size_t(i)] = id;
  });

  nlohmann::json manifest;
  manifest["ids"] = ids;
  manifest["count"] = cfg.count;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = hex64(synth_config_hash(cfg));
  manifest["resolution"] = {cfg.warp.width, cfg.warp.height};
  write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return ids;
}

std::vector<std::string> list_triplet_ids(const std::string& dataset_dir) {
  const fs::path manifest = fs::path(dataset_dir) / "manifest.json";
  if (!fs::exists(manifest)) throw DatasetFormatError("missing manifest: " + manifest.string());
  json j;
  try {
    j = json::parse(read_text_file(manifest.string()));
  } catch (const json::exception& e) {
    throw DatasetFormatError(manifest.string() + ": " + e.what());
  }
  return j.at("ids").get<std::vector<std::string>>();
}

StoredTriplet load_triplet(const std::string& dataset_dir, const std::string& id) {
  const fs::path dir = fs::path(dataset_dir) / "pairs" / id;
  if (!fs::exists(dir / "B.png")) throw DatasetFormatError("missing triplet: " + dir.string());
  StoredTriplet t;
  t.id = id;
  t.a = read_png_gray((dir / "A.png").string());
  t.b = read_png_gray((dir / "B.png").string());
  t.bp = read_png_gray((dir / "Bp.png").string());
  t.g = load_warp_json((dir / "g.json").string());
  t.gp = load_warp_json((dir / "gp.json").string());
  t.valid_b = read_png_mask((dir / "valid_B.png").string());
  t.valid_bp = read_png_mask((dir / "valid_Bp.png").string());
  return t;
}

std::vector<std::string> write_pair_dataset(const std::string& out_dir,
                                            const SynthDatasetConfig& cfg, int jobs) {
  fs::create_directories(out_dir);
  std::vector<std::string> anchors;
  if (!cfg.image_dir.empty()) anchors = anchor_paths(cfg.image_dir);

  std::vector<std::string> ids(std::size_t(cfg.count));
  parallel_over(cfg.count, jobs, [&](int i) {
    Rng rng = Rng::stream(cfg.seed, std::uint64_t(i));
    const Image anchor = anchor_for(cfg, anchors, i, rng);
    WarpConfig wcfg = cfg.warp;
    wcfg.height = int(anchor.rows());
    wcfg.width = int(anchor.cols());
    CompositeWarp warp;
    WarpedImage warped;
    for (int attempt = 0;; ++attempt) {
      warp = sample_random_warp(wcfg, rng);
      try {
        warped = warp_image(anchor, warp, anchor.rows(), anchor.cols());
        break;
      } catch (const NonInvertibleWarp&) {
        if (attempt == 4) throw;
      }
    }
    Image b = photometric_augment(warped.image, cfg.photometric, rng);
    for (Eigen::Index k = 0; k < b.size(); ++k)
      if (!*(warped.valid.data() + k)) *(b.data() + k) = 0.0f;

    const std::string id = pair_id(i);
    const fs::path dir = fs::path(out_dir) / id;
    fs::create_directories(dir);
    write_png_gray8((dir / "a.png").string(), anchor);
    write_png_gray8((dir / "b.png").string(), b);
    save_warp_json((dir / "warp.json").string(), warp);
    write_png_mask((dir / "valid_b.png").string(), warped.valid);
    ids[std::size_t(i)] = id;
  });

  json manifest;
  manifest["ids"] = ids;
  manifest["count"] = cfg.count;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = hex64(synth_config_hash(cfg));
  write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return ids;
}

}  // namespace nrkd
