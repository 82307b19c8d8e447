#include "kernels/spin_image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "core/error.hpp"

namespace dls::kernels {

namespace {

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) noexcept {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

SpinImageParams::SpinImageParams(std::uint32_t width, double bin_size, double support_angle,
                                 std::vector<OrientedPoint> points)
    : width_(width), bin_size_(bin_size), support_angle_(support_angle), points_(std::move(points)) {
  if (width_ == 0) throw Error(Errc::invalid_argument, "spin-image width must be at least 1");
  if (!(bin_size_ > 0.0) || !std::isfinite(bin_size_))
    throw Error(Errc::invalid_argument, "spin-image bin size must be positive");
  if (!(support_angle_ >= 0.0 && support_angle_ <= std::numbers::pi))
    throw Error(Errc::invalid_argument, "support angle must lie in [0, pi]");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double len = std::sqrt(dot(points_[i].normal, points_[i].normal));
    if (!(std::abs(len - 1.0) <= 1e-9))
      throw Error(Errc::invalid_argument, "normal of point " + std::to_string(i) + " has length " +
                                              std::to_string(len) + ", expected 1");
  }
}

std::vector<std::uint32_t> spin_image(std::uint64_t image_index, const SpinImageParams& params) {
  const auto& pts = params.points();
  if (image_index >= pts.size())
    throw Error(Errc::invalid_argument, "spin-image index " + std::to_string(image_index) + " out of range");
  const std::uint32_t W = params.width();
  const double B = params.bin_size();
  const double S = params.support_angle();
  std::vector<std::uint32_t> image(std::size_t{W} * W, 0);

  const OrientedPoint& P = pts[image_index];
  const auto& np_i = P.normal;
  for (const OrientedPoint& X : pts) {
    const double c = std::clamp(dot(np_i, X.normal), -1.0, 1.0);
    if (!(std::acos(c) <= S)) continue;
    const std::array<double, 3> d{X.position[0] - P.position[0], X.position[1] - P.position[1],
                                  X.position[2] - P.position[2]};
    const double beta = dot(np_i, d);
    const double alpha_sq = std::max(0.0, dot(d, d) - beta * beta);
    const double kf = std::ceil((W / 2.0 - beta) / B);
    const double lf = std::ceil(std::sqrt(alpha_sq) / B);
    if (kf >= 0.0 && kf < W && lf >= 0.0 && lf < W)
      ++image[static_cast<std::size_t>(kf) * W + static_cast<std::size_t>(lf)];
  }
  return image;
}

std::vector<OrientedPoint> generate_point_cloud(const PointCloudSpec& spec) {
  if (spec.clusters == 0) throw Error(Errc::invalid_argument, "point cloud needs at least one cluster");
  if (!(spec.spread > 0.0)) throw Error(Errc::invalid_argument, "cluster spread must be positive");
  std::mt19937_64 gen(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::array<double, 3>> centers(spec.clusters);
  for (auto& c : centers) c = {unit(gen), unit(gen), unit(gen)};
  // cluster k gets weight 2^-k (renormalized): a few dense clusters, a long sparse tail
  std::vector<double> weights(spec.clusters);
  for (std::uint32_t k = 0; k < spec.clusters; ++k) weights[k] = std::ldexp(1.0, -static_cast<int>(std::min(k, 60u)));
  std::discrete_distribution<std::uint32_t> pick(weights.begin(), weights.end());

  std::vector<OrientedPoint> out;
  out.reserve(spec.points);
  while (out.size() < spec.points) {
    const auto& c = centers[pick(gen)];
    OrientedPoint p;
    std::array<double, 3> off{gauss(gen), gauss(gen), gauss(gen)};
    for (int a = 0; a < 3; ++a) p.position[a] = c[a] + spec.spread * off[a];
    std::array<double, 3> n{};
    for (int a = 0; a < 3; ++a) n[a] = off[a] + spec.normal_noise * gauss(gen);
    const double len = std::sqrt(dot(n, n));
    if (!(len > 1e-12)) continue;
    for (int a = 0; a < 3; ++a) p.normal[a] = n[a] / len;
    // renormalize once more so the length is within rounding of 1
    const double len2 = std::sqrt(dot(p.normal, p.normal));
    for (int a = 0; a < 3; ++a) p.normal[a] /= len2;
    out.push_back(p);
  }
  return out;
}

std::vector<OrientedPoint> read_point_cloud(std::istream& in) {
  std::vector<OrientedPoint> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    OrientedPoint p;
    if (!(ls >> p.position[0] >> p.position[1] >> p.position[2] >> p.normal[0] >> p.normal[1] >> p.normal[2]))
      throw Error(Errc::invalid_argument, "point cloud line " + std::to_string(lineno) + ": expected 6 numbers");
    std::string extra;
    if (ls >> extra)
      throw Error(Errc::invalid_argument, "point cloud line " + std::to_string(lineno) + ": trailing data");
    out.push_back(p);
  }
  return out;
}

std::vector<OrientedPoint> load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open point cloud: " + path);
  return read_point_cloud(in);
}

void write_spin_image_csv(std::ostream& out, const std::vector<std::uint32_t>& image,
                          std::uint32_t width) {
  if (image.size() != std::size_t{width} * width)
    throw Error(Errc::invalid_argument, "spin-image size does not match width");
  std::string buf;
  for (std::uint32_t k = 0; k < width; ++k) {
    for (std::uint32_t l = 0; l < width; ++l) {
      if (l) buf.push_back(',');
      buf += std::to_string(image[std::size_t{k} * width + l]);
    }
    buf.push_back('\n');
  }
  out << buf;
}

void write_spin_image_csv(const std::string& path, const std::vector<std::uint32_t>& image,
                          std::uint32_t width) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open spin-image file for writing: " + path);
  write_spin_image_csv(out, image, width);
  if (!out) throw Error(Errc::io_error, "failed writing spin-image file: " + path);
}

}  // namespace dls::kernels
