#include "nrkd/plugin.hpp"

#include "nrkd/errors.hpp"
#include "nrkd/io/formats.hpp"
#include "nrkd/io/png_io.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace nrkd {

void write_keypoints_csv(const std::string& path, const std::vector<Keypoint>& kps) {
  std::ostringstream ss;
  char line[96];
  for (const Keypoint& kp : kps) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f\n", kp.x, kp.y, kp.score);
    ss << line;
  }
  write_text_file(path, ss.str());
}

std::vector<Keypoint> read_keypoints_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Keypoint> kps;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Keypoint kp;
    char extra;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf %c", &kp.x, &kp.y, &kp.score, &extra) != 3)
      throw PluginProtocolError(path + ":" + std::to_string(lineno) + ": expected x,y,score");
    kps.push_back(kp);
  }
  return kps;
}

void write_descriptors_nrkd(const std::string& path, const DescriptorSet& ds) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CorruptFile("cannot open for write: " + path);
  const std::uint32_t n = std::uint32_t(ds.count()), d = std::uint32_t(ds.dim());
  f.write("NRKD", 4);
  f.write(reinterpret_cast<const char*>(&n), 4);
  f.write(reinterpret_cast<const char*>(&d), 4);
  f.write(reinterpret_cast<const char*>(ds.vectors.data()),
          std::streamsize(sizeof(float)) * n * d);
  if (!f) throw CorruptFile("write failed: " + path);
}

Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
read_descriptors_nrkd(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw PluginProtocolError("cannot open descriptor file: " + path);
  char magic[4];
  std::uint32_t n = 0, d = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&n), 4);
  f.read(reinterpret_cast<char*>(&d), 4);
  if (!f || std::memcmp(magic, "NRKD", 4) != 0)
    throw PluginProtocolError("bad descriptor header: " + path);
  if (n > 1u << 24 || d > 1u << 16)
    throw PluginProtocolError("implausible descriptor shape: " + path);
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(n, d);
  f.read(reinterpret_cast<char*>(m.data()), std::streamsize(sizeof(float)) * n * d);
  if (!f) throw PluginProtocolError("truncated descriptor file: " + path);
  return m;
}

PluginSpec parse_plugin_flag(const std::string& flag) {
  const auto eq = flag.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= flag.size())
    throw ConfigError("--plugin expects name=command, got: " + flag);
  PluginSpec spec;
  spec.kind = PluginSpec::Kind::external;
  spec.name = flag.substr(0, eq);
  spec.command = flag.substr(eq + 1);
  return spec;
}

namespace {

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
  std::string::size_type pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

// Run through /bin/sh with a wall-clock limit.
void run_with_timeout(const std::string& cmd, double timeout_sec) {
  const pid_t pid = fork();
  if (pid < 0) throw PluginProtocolError("fork failed");
  if (pid == 0) {
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_sec);
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw PluginProtocolError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw PluginTimeout("plugin exceeded " + std::to_string(timeout_sec) + "s: " + cmd);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw PluginProtocolError("plugin command failed: " + cmd);
}

fs::path plugin_work_dir(const PluginSpec& spec) {
  if (!spec.work_dir.empty()) return spec.work_dir;
  if (const char* cache = std::getenv("NRKD_CACHE")) return cache;
  return fs::temp_directory_path() / "nrkd_plugins";
}

}  // namespace

PluginResult run_external_plugin(const PluginSpec& spec, const std::string& image_path, int k) {
  if (spec.kind != PluginSpec::Kind::external)
    throw ConfigError("run_external_plugin needs an external spec");

  static std::atomic<std::uint64_t> invocation{0};
  const fs::path dir = plugin_work_dir(spec) /
                       (spec.name + "_" + std::to_string(getpid()) + "_" +
                        std::to_string(invocation.fetch_add(1)));
  fs::create_directories(dir);
  const std::string kpts_path = (dir / "keypoints.csv").string();
  const std::string desc_path = (dir / "descriptors.bin").string();

  // request file mirrors the substituted arguments, for plugins that prefer
  // a single manifest over positional templates
  write_text_file((dir / "request.json").string(),
                  std::string("{\"image\": \"") + image_path + "\", \"k\": " + std::to_string(k) +
                      ", \"kpts\": \"" + kpts_path + "\", \"desc\": \"" + desc_path + "\"}\n");

  std::string cmd = spec.command;
  cmd = substitute(cmd, "{image}", image_path);
  cmd = substitute(cmd, "{k}", std::to_string(k));
  cmd = substitute(cmd, "{kpts}", kpts_path);
  cmd = substitute(cmd, "{desc}", desc_path);
  cmd = substitute(cmd, "{request}", (dir / "request.json").string());
  run_with_timeout(cmd, spec.timeout_sec);

  PluginResult res;
  res.keypoints = read_keypoints_csv(kpts_path);
  auto vectors = read_descriptors_nrkd(desc_path);
  if (Eigen::Index(res.keypoints.size()) != vectors.rows())
    throw PluginProtocolError(spec.name + ": keypoint/descriptor count mismatch");

  const Image probe = read_png_gray(image_path);
  for (const Keypoint& kp : res.keypoints)
    if (!(kp.x >= 0.0 && kp.y >= 0.0 && kp.x < double(probe.cols()) &&
          kp.y < double(probe.rows())))
      throw PluginProtocolError(spec.name + ": keypoint out of bounds (" +
                                std::to_string(kp.x) + ", " + std::to_string(kp.y) + ")");

  bool renormalized = false;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    const float norm = vectors.row(i).norm();
    if (norm <= 0.0f) throw PluginProtocolError(spec.name + ": zero descriptor row");
    if (std::abs(norm - 1.0f) > 1e-5f) {
      vectors.row(i) /= norm;
      renormalized = true;
    }
  }
  if (renormalized)
    std::cerr << "warning: plugin '" << spec.name << "' emitted non-normalized descriptors;"
              << " rows renormalized\n";

  res.descriptors.keypoints = res.keypoints;
  res.descriptors.vectors = std::move(vectors);
  std::error_code ec;
  fs::remove_all(dir, ec);
  return res;
}

PluginResult extract_features(const PluginSpec& spec, const Image& image,
                              const std::string& image_path, int k) {
  if (spec.kind == PluginSpec::Kind::builtin) {
    PluginResult res;
    res.keypoints = detect_builtin(image, k);
    res.descriptors = describe_builtin(image, res.keypoints);
    return res;
  }
  return run_external_plugin(spec, image_path, k);
}

}  // namespace nrkd
