#include "kernels/mandelbrot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "core/error.hpp"

namespace dls::kernels {

MandelbrotParams mandelbrot_params_from_bounds(std::uint32_t width, std::uint32_t height,
                                               std::uint32_t max_iterations, double real_min,
                                               double real_max, double imag_min, double imag_max,
                                               std::uint32_t scale_color) {
  if (width == 0 || height == 0) throw Error(Errc::invalid_argument, "image dimensions must be positive");
  if (max_iterations == 0) throw Error(Errc::invalid_argument, "max iterations must be at least 1");
  if (!(real_max > real_min) || !(imag_max > imag_min) || !std::isfinite(real_max - real_min) ||
      !std::isfinite(imag_max - imag_min))
    throw Error(Errc::invalid_argument, "viewport bounds must span a positive finite range");
  MandelbrotParams p;
  p.width = width;
  p.height = height;
  p.max_iterations = max_iterations;
  p.real_min = real_min;
  p.real_max = real_max;
  p.imag_min = imag_min;
  p.imag_max = imag_max;
  p.scale_real = (real_max - real_min) / width;
  p.scale_imag = (imag_max - imag_min) / height;
  p.scale_color = scale_color;
  return p;
}

MandelbrotParams mandelbrot_params(std::uint32_t width, std::uint32_t height,
                                   std::uint32_t max_iterations, double center_real,
                                   double center_imag, double view_width,
                                   std::uint32_t scale_color) {
  if (width == 0 || height == 0) throw Error(Errc::invalid_argument, "image dimensions must be positive");
  const double view_height = view_width * height / width;
  return mandelbrot_params_from_bounds(width, height, max_iterations, center_real - view_width / 2,
                                       center_real + view_width / 2, center_imag - view_height / 2,
                                       center_imag + view_height / 2, scale_color);
}

std::uint32_t mandelbrot_iterations(std::uint64_t i, const MandelbrotParams& p) noexcept {
  constexpr double escape = 2.0;
  const std::uint64_t row = i / p.width;
  const std::uint64_t col = i % p.width;
  const double c_real = p.real_min + static_cast<double>(col) * p.scale_real;
  // row 0 is the top of the image
  const double c_imag = p.imag_min + static_cast<double>(p.height - 1 - row) * p.scale_imag;

  double zr = 0.0, zi = 0.0, lengthsq = 0.0;
  std::uint32_t k = 0;
  while (lengthsq < escape * escape && k < p.max_iterations) {
    const double zr2 = zr * zr, zi2 = zi * zi;
    const double temp = zr2 * zr2 - 6.0 * zi2 * zr2 + zi2 * zi2 + c_real;
    zi = 4.0 * zr2 * zr * zi - 4.0 * zr * zi2 * zi + c_imag;
    zr = temp;
    lengthsq = zr * zr + zi * zi;
    ++k;
  }
  return k;
}

std::uint64_t mandelbrot_pixel(std::uint64_t i, const MandelbrotParams& p) noexcept {
  return std::uint64_t{mandelbrot_iterations(i, p) - 1} * p.scale_color;
}

std::string encode_pgm(std::span<const std::uint64_t> pixels, std::uint32_t width,
                       std::uint32_t height) {
  if (pixels.size() != std::uint64_t{width} * height)
    throw Error(Errc::invalid_argument, "pixel count does not match image dimensions");
  const std::uint64_t peak = pixels.empty() ? 0 : *std::max_element(pixels.begin(), pixels.end());
  const std::uint64_t maxval = std::clamp<std::uint64_t>(peak, 1, 65535);
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                    std::to_string(maxval) + "\n";
  const bool wide = maxval > 255;
  out.reserve(out.size() + pixels.size() * (wide ? 2 : 1));
  for (std::uint64_t v : pixels) {
    const std::uint64_t s = std::min(v, maxval);
    if (wide) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xFF));
  }
  return out;
}

void write_pgm(const std::string& path, std::span<const std::uint64_t> pixels, std::uint32_t width,
               std::uint32_t height) {
  const std::string bytes = encode_pgm(pixels, width, height);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open image file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "failed writing image file: " + path);
}

}  // namespace dls::kernels
