#include "nrkd/io/formats.hpp"

#include "nrkd/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace nrkd {

using nlohmann::json;

nlohmann::json warp_to_json(const CompositeWarp& w) {
  json j;
  auto& h = j["homography"] = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.push_back(w.homography.matrix(r, c));
  json tps;
  auto& a = tps["affine"] = json::array();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(w.tps.affine(r, c));
  auto& cp = tps["control_points"] = json::array();
  for (Eigen::Index i = 0; i < w.tps.control_points.cols(); ++i)
    cp.push_back({w.tps.control_points(0, i), w.tps.control_points(1, i)});
  auto& ws = tps["weights"] = json::array();
  for (Eigen::Index i = 0; i < w.tps.weights.rows(); ++i)
    ws.push_back({w.tps.weights(i, 0), w.tps.weights(i, 1)});
  j["tps"] = std::move(tps);
  return j;
}

CompositeWarp warp_from_json(const nlohmann::json& j) {
  CompositeWarp w;
  const auto& h = j.at("homography");
  if (h.size() != 9) throw CorruptFile("homography must have 9 entries");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) w.homography.matrix(r, c) = h.at(std::size_t(3 * r + c)).get<double>();
  const auto& tps = j.at("tps");
  const auto& a = tps.at("affine");
  if (a.size() != 6) throw CorruptFile("tps affine must have 6 entries");
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) w.tps.affine(r, c) = a.at(std::size_t(3 * r + c)).get<double>();
  const auto& cp = tps.at("control_points");
  const auto& ws = tps.at("weights");
  if (cp.size() != ws.size()) throw CorruptFile("control point / weight count mismatch");
  w.tps.control_points.resize(2, Eigen::Index(cp.size()));
  w.tps.weights.resize(Eigen::Index(ws.size()), 2);
  for (std::size_t i = 0; i < cp.size(); ++i) {
    w.tps.control_points(0, Eigen::Index(i)) = cp.at(i).at(0).get<double>();
    w.tps.control_points(1, Eigen::Index(i)) = cp.at(i).at(1).get<double>();
    w.tps.weights(Eigen::Index(i), 0) = ws.at(i).at(0).get<double>();
    w.tps.weights(Eigen::Index(i), 1) = ws.at(i).at(1).get<double>();
  }
  return w;
}

void save_warp_json(const std::string& path, const CompositeWarp& w) {
  write_text_file(path, warp_to_json(w).dump(2) + "\n");
}

CompositeWarp load_warp_json(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw CorruptFile(path + ": " + e.what());
  }
  return warp_from_json(j);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CorruptFile("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CorruptFile("cannot open for write: " + path);
  f << content;
  if (!f) throw CorruptFile("write failed: " + path);
}

}  // namespace nrkd
