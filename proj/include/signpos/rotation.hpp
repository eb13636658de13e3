#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>

#include "signpos/errors.hpp"

namespace signpos {

/// A diagonal single-qubit gate Rz(theta), theta restricted to multiples of pi/2.
/// The underlying value is theta in units of pi/2.
enum class Rotation : std::int8_t {
  minus_pi = -2,
  minus_half_pi = -1,
  identity = 0,
  half_pi = 1,
  pi = 2,
};

inline constexpr std::array<Rotation, 5> kAllRotations = {
    Rotation::identity, Rotation::pi, Rotation::minus_pi, Rotation::half_pi,
    Rotation::minus_half_pi};

inline constexpr int quarter_turns(Rotation r) { return static_cast<int>(r); }

inline Rotation rotation_from_quarter_turns(int q) {
  if (q < -2 || q > 2) {
    throw InvalidProtocol("rotation angle must be one of -2..2 in units of pi/2, got " +
                          std::to_string(q));
  }
  return static_cast<Rotation>(q);
}

/// i^q, exact for any integer q.
inline std::complex<double> i_pow(int q) {
  switch (((q % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

/// exp(i*pi*k/4), exact up to rounding of 1/sqrt(2).
inline std::complex<double> eighth_root(int k) {
  constexpr double h = 0.70710678118654752440;
  switch (((k % 8) + 8) % 8) {
    case 0: return {1.0, 0.0};
    case 1: return {h, h};
    case 2: return {0.0, 1.0};
    case 3: return {-h, h};
    case 4: return {-1.0, 0.0};
    case 5: return {-h, -h};
    case 6: return {0.0, -1.0};
    default: return {h, -h};
  }
}

}  // namespace signpos
