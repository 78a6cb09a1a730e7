// sRGB (8-bit, D65) to CIE Lab, standard published constants.
#pragma once

#include <cmath>
#include <cstdint>

namespace kmu {

struct Lab {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

namespace detail {

inline double srgb_linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  constexpr double delta3 = delta * delta * delta;
  return t > delta3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace detail

inline Lab rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = detail::srgb_linearize(r8 / 255.0);
  const double g = detail::srgb_linearize(g8 / 255.0);
  const double b = detail::srgb_linearize(b8 / 255.0);

  // sRGB -> XYZ (D65, 2 degree observer)
  const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

  constexpr double Xn = 0.4124564 + 0.3575761 + 0.1804375;
  constexpr double Yn = 0.2126729 + 0.7151522 + 0.0721750;
  constexpr double Zn = 0.0193339 + 0.1191920 + 0.9503041;

  const double fx = detail::lab_f(X / Xn);
  const double fy = detail::lab_f(Y / Yn);
  const double fz = detail::lab_f(Z / Zn);

  Lab lab;
  lab.L = 116.0 * fy - 16.0;
  lab.a = 500.0 * (fx - fy);
  lab.b = 200.0 * (fy - fz);
  return lab;
}

}  // namespace kmu
