#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dls::kernels {

/// Viewport and scaling of the z^4 + c Mandelbrot benchmark. Use
/// `mandelbrot_params` to build a consistent instance.
struct MandelbrotParams {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t max_iterations = 0;
  double real_min = 0.0;
  double real_max = 0.0;
  double imag_min = 0.0;
  double imag_max = 0.0;
  double scale_real = 0.0;
  double scale_imag = 0.0;
  std::uint32_t scale_color = 1;

  std::uint64_t tasks() const noexcept { return std::uint64_t{width} * height; }
};

/// Centered on a seahorse-valley filament of the quartic set. Wide enough to
/// include both fast-escaping and capped pixels.
inline constexpr double kSeahorseCenterReal = -0.825;
inline constexpr double kSeahorseCenterImag = 0.15;
inline constexpr double kSeahorseWidth = 0.05;

/// Square pixels: the imaginary extent is width * height / width.
/// Throws invalid-argument on zero sizes, K = 0 or a non-positive span.
MandelbrotParams mandelbrot_params(std::uint32_t width, std::uint32_t height,
                                   std::uint32_t max_iterations,
                                   double center_real = kSeahorseCenterReal,
                                   double center_imag = kSeahorseCenterImag,
                                   double view_width = kSeahorseWidth,
                                   std::uint32_t scale_color = 1);

/// Builds from explicit bounds; SR and SI are derived.
MandelbrotParams mandelbrot_params_from_bounds(std::uint32_t width, std::uint32_t height,
                                               std::uint32_t max_iterations, double real_min,
                                               double real_max, double imag_min, double imag_max,
                                               std::uint32_t scale_color = 1);

/// Iterations performed for pixel i (1..K).
std::uint32_t mandelbrot_iterations(std::uint64_t i, const MandelbrotParams& p) noexcept;

/// Color of pixel i: (k - 1) * SC.
std::uint64_t mandelbrot_pixel(std::uint64_t i, const MandelbrotParams& p) noexcept;

/// Binary PGM. 8-bit samples when every value fits, otherwise 16-bit
/// big-endian; values above 65535 saturate.
std::string encode_pgm(std::span<const std::uint64_t> pixels, std::uint32_t width,
                       std::uint32_t height);
void write_pgm(const std::string& path, std::span<const std::uint64_t> pixels, std::uint32_t width,
               std::uint32_t height);

}  // namespace dls::kernels
