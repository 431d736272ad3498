#pragma once

#include <cmath>
#include <stdexcept>

namespace tbmimo {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Direction of arrival/departure measured from array broadside, degrees.
// Valid range is [-90, 90]; everything past endfire is rejected.
class AngleDeg {
 public:
  explicit AngleDeg(double deg) : deg_(deg) {
    if (!(deg >= -90.0 && deg <= 90.0))
      throw std::domain_error("AngleDeg: angle " + std::to_string(deg) +
                              " outside [-90, 90] degrees");
  }
  double deg() const { return deg_; }
  double rad() const { return deg2rad(deg_); }

 private:
  double deg_;
};

}  // namespace tbmimo
