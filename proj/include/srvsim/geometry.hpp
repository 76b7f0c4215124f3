#pragma once

// Small exact geometry on the sphere and the circle: the sgn convention,
// unit direction vectors, coordinate-axis rotations and plane intersection.
// Everything here is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace srvsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHalfPi = 0.5 * std::numbers::pi;

struct OutOfRange : std::domain_error {
  using std::domain_error::domain_error;
};

// Raised by intersect_planes when the two normals constrain the same plane.
struct DegenerateIntersection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two-valued sign, the output alphabet of every protocol.
class SignBit {
 public:
  constexpr explicit SignBit(int value) : value_(static_cast<std::int8_t>(value)) {
    if (value != 1 && value != -1) {
      throw std::invalid_argument("SignBit: value must be +1 or -1");
    }
  }

  static constexpr SignBit plus() { return SignBit(1); }
  static constexpr SignBit minus() { return SignBit(-1); }

  constexpr int value() const { return value_; }
  constexpr SignBit operator-() const { return SignBit(-value_); }

  friend constexpr SignBit operator*(SignBit a, SignBit b) {
    return SignBit(a.value_ * b.value_);
  }
  friend constexpr bool operator==(SignBit, SignBit) = default;

 private:
  std::int8_t value_;
};

// sgn(x) = +1 for x >= 0, -1 for x < 0. The tie at zero is part of the
// protocol definition, not a numerical accident; every formula in this
// library inherits it.
inline SignBit sgn(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("sgn: input must be finite");
  }
  return x >= 0.0 ? SignBit::plus() : SignBit::minus();
}

// Direction on the unit sphere. The constructor normalizes, so the unit
// invariant holds after every construction and rotation.
class UnitVec3 {
 public:
  UnitVec3(double x, double y, double z) {
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (!std::isfinite(norm) || norm < 1e-12) {
      throw std::invalid_argument("UnitVec3: cannot normalize a near-zero vector");
    }
    x_ = x / norm;
    y_ = y / norm;
    z_ = z / norm;
  }

  static UnitVec3 x_axis() { return UnitVec3(1.0, 0.0, 0.0); }
  static UnitVec3 y_axis() { return UnitVec3(0.0, 1.0, 0.0); }
  static UnitVec3 z_axis() { return UnitVec3(0.0, 0.0, 1.0); }

  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  double dot(const UnitVec3& o) const { return x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }

  UnitVec3 operator-() const { return UnitVec3(-x_, -y_, -z_); }

  // Angle between directions, in [0, pi].
  double angle_to(const UnitVec3& o) const {
    const double cx = y_ * o.z_ - z_ * o.y_;
    const double cy = z_ * o.x_ - x_ * o.z_;
    const double cz = x_ * o.y_ - y_ * o.x_;
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot(o));
  }

  // Angle between axes (direction identified with its opposite), in [0, pi/2].
  double axis_angle_to(const UnitVec3& o) const {
    const double t = angle_to(o);
    return std::min(t, kPi - t);
  }

  friend bool operator==(const UnitVec3&, const UnitVec3&) = default;

 private:
  double x_, y_, z_;
};

enum class Axis { X, Y, Z };

// Right-hand-rule rotation about a coordinate axis. The result is
// re-normalized by the UnitVec3 constructor.
inline UnitVec3 rotate_about_axis(const UnitVec3& v, Axis axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  switch (axis) {
    case Axis::X:
      return UnitVec3(v.x(), c * v.y() - s * v.z(), s * v.y() + c * v.z());
    case Axis::Y:
      return UnitVec3(c * v.x() + s * v.z(), v.y(), -s * v.x() + c * v.z());
    case Axis::Z:
      return UnitVec3(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
  }
  throw std::logic_error("rotate_about_axis: invalid axis");
}

// Normalized n1 x n2: the direction lying in both planes, orthogonal to both
// normals. The +- ambiguity is inherent and resolved by the caller.
inline UnitVec3 intersect_planes(const UnitVec3& n1, const UnitVec3& n2) {
  const double cx = n1.y() * n2.z() - n1.z() * n2.y();
  const double cy = n1.z() * n2.x() - n1.x() * n2.z();
  const double cz = n1.x() * n2.y() - n1.y() * n2.x();
  const double norm = std::sqrt(cx * cx + cy * cy + cz * cz);
  if (norm < 1e-6) {
    throw DegenerateIntersection("intersect_planes: normals are (anti)parallel");
  }
  return UnitVec3(cx, cy, cz);
}

// Angle on the circle, canonicalized to [0, 2*pi) after every operation.
class PlaneAngle {
 public:
  constexpr PlaneAngle() = default;

  explicit PlaneAngle(double radians) {
    if (!std::isfinite(radians)) {
      throw std::invalid_argument("PlaneAngle: angle must be finite");
    }
    double r = std::fmod(radians, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;  // fmod(-tiny) + 2*pi can round up to 2*pi
    radians_ = r;
  }

  double radians() const { return radians_; }

  PlaneAngle operator+(double delta) const { return PlaneAngle(radians_ + delta); }
  PlaneAngle operator-(double delta) const { return PlaneAngle(radians_ - delta); }
  PlaneAngle operator+(PlaneAngle o) const { return PlaneAngle(radians_ + o.radians_); }
  PlaneAngle operator-(PlaneAngle o) const { return PlaneAngle(radians_ - o.radians_); }

  // The 2-D unit vector of the angle, embedded in the xy-plane.
  UnitVec3 unit_xy() const { return UnitVec3(std::cos(radians_), std::sin(radians_), 0.0); }

  friend bool operator==(PlaneAngle, PlaneAngle) = default;

 private:
  double radians_ = 0.0;
};

// Distance between two circle directions, folded into [0, pi].
inline double folded_distance(PlaneAngle a, PlaneAngle b) {
  const double d = std::fabs(a.radians() - b.radians());
  return std::min(d, kTwoPi - d);
}

// Distance between two circle axes (direction ~ direction + pi), in [0, pi/2].
inline double axis_distance(PlaneAngle a, PlaneAngle b) {
  const double d = folded_distance(a, b);
  return std::min(d, kPi - d);
}

}  // namespace srvsim
