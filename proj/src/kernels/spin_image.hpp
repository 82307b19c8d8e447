#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dls::kernels {

struct OrientedPoint {
  std::array<double, 3> position{};
  std::array<double, 3> normal{};
};

/// Validated inputs for spin-image generation. One task per point.
class SpinImageParams {
 public:
  /// Throws invalid-argument when width is 0, bin size is not positive, the
  /// support angle is outside [0, pi] or any normal is off unit length by
  /// more than 1e-9.
  SpinImageParams(std::uint32_t width, double bin_size, double support_angle,
                  std::vector<OrientedPoint> points);

  std::uint32_t width() const noexcept { return width_; }
  double bin_size() const noexcept { return bin_size_; }
  double support_angle() const noexcept { return support_angle_; }
  const std::vector<OrientedPoint>& points() const noexcept { return points_; }
  std::uint64_t tasks() const noexcept { return points_.size(); }

 private:
  std::uint32_t width_;
  double bin_size_;
  double support_angle_;
  std::vector<OrientedPoint> points_;
};

/// Row-major W x W histogram for the point at `image_index`; cell (k, l)
/// lives at k * W + l.
std::vector<std::uint32_t> spin_image(std::uint64_t image_index, const SpinImageParams& params);

struct PointCloudSpec {
  std::uint64_t points = 1000;
  std::uint32_t clusters = 8;
  /// Standard deviation of each cluster around its center.
  double spread = 0.05;
  /// Std-dev of the perturbation added to the radial normal before
  /// renormalizing.
  double normal_noise = 0.2;
  std::uint64_t seed = 0;
};

/// Gaussian-mixture cloud with unequal cluster populations, so neighbor
/// density (and with it per-image cost) varies across points.
std::vector<OrientedPoint> generate_point_cloud(const PointCloudSpec& spec);

/// Whitespace-separated `px py pz nx ny nz`, one point per line; blank lines
/// and lines starting with '#' are skipped. Throws io-error on open failure
/// and invalid-argument naming the line on malformed input.
std::vector<OrientedPoint> load_point_cloud(const std::string& path);
std::vector<OrientedPoint> read_point_cloud(std::istream& in);

/// W lines of W comma-separated counts.
void write_spin_image_csv(std::ostream& out, const std::vector<std::uint32_t>& image,
                          std::uint32_t width);
void write_spin_image_csv(const std::string& path, const std::vector<std::uint32_t>& image,
                          std::uint32_t width);

}  // namespace dls::kernels
