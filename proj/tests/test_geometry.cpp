#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "srvsim/geometry.hpp"
#include "srvsim/random.hpp"

using namespace srvsim;

namespace {

bool close_vec(const UnitVec3& a, const UnitVec3& b, double tol = 1e-9) {
  return std::fabs(a.x() - b.x()) <= tol && std::fabs(a.y() - b.y()) <= tol &&
         std::fabs(a.z() - b.z()) <= tol;
}

}  // namespace

TEST_CASE("sgn follows the x >= 0 convention") {
  CHECK(sgn(0.0) == SignBit::plus());
  CHECK(sgn(-0.0) == SignBit::plus());
  CHECK(sgn(-0.5) == SignBit::minus());
  CHECK(sgn(3.2) == SignBit::plus());
  CHECK_THROWS_AS(sgn(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  CHECK_THROWS_AS(sgn(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("sgn is idempotent under multiplication by +1") {
  RandomStream rs(11);
  for (int i = 0; i < 1000; ++i) {
    const double x = 10.0 * (rs.next_unit() - 0.5);
    const SignBit s = sgn(x);
    CHECK(s * SignBit::plus() == s);
    CHECK(sgn(static_cast<double>(s.value())) == s);
  }
}

TEST_CASE("SignBit admits exactly the two inhabitants") {
  CHECK_THROWS_AS(SignBit(0), std::invalid_argument);
  CHECK_THROWS_AS(SignBit(2), std::invalid_argument);
  CHECK((SignBit::plus() * SignBit::minus()) == SignBit::minus());
  CHECK((-SignBit::minus()) == SignBit::plus());
}

TEST_CASE("UnitVec3 normalizes on construction") {
  const UnitVec3 v(3.0, -4.0, 12.0);
  CHECK(std::fabs(v.x() * v.x() + v.y() * v.y() + v.z() * v.z() - 1.0) < 1e-9);
  CHECK_THROWS_AS(UnitVec3(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("rotate_about_axis matches the coordinate rotations") {
  CHECK(close_vec(rotate_about_axis(UnitVec3::x_axis(), Axis::Z, kHalfPi), UnitVec3::y_axis()));
  CHECK(close_vec(rotate_about_axis(UnitVec3::x_axis(), Axis::Y, kHalfPi), -UnitVec3::z_axis()));
  const UnitVec3 v(0.3, -0.2, 0.93);
  CHECK(close_vec(rotate_about_axis(v, Axis::Z, 0.0), v));
}

TEST_CASE("rotations compose additively") {
  RandomStream rs(21);
  for (int i = 0; i < 200; ++i) {
    const UnitVec3 v = sample_unit_sphere(rs);
    const double t1 = kTwoPi * rs.next_unit();
    const double t2 = kTwoPi * rs.next_unit();
    for (Axis ax : {Axis::X, Axis::Y, Axis::Z}) {
      const UnitVec3 two_steps = rotate_about_axis(rotate_about_axis(v, ax, t1), ax, t2);
      const UnitVec3 one_step = rotate_about_axis(v, ax, t1 + t2);
      CHECK(close_vec(two_steps, one_step));
    }
  }
}

TEST_CASE("intersect_planes returns the common direction") {
  const UnitVec3 r1 = intersect_planes(UnitVec3::x_axis(), UnitVec3::z_axis());
  CHECK(close_vec(r1, -UnitVec3::y_axis()));

  const UnitVec3 r2 = intersect_planes(UnitVec3(1.0, 1.0, 0.0), UnitVec3::z_axis());
  const UnitVec3 expect(1.0, -1.0, 0.0);
  CHECK((close_vec(r2, expect) || close_vec(r2, -expect)));

  CHECK_THROWS_AS(intersect_planes(UnitVec3::x_axis(), UnitVec3::x_axis()),
                  DegenerateIntersection);
  CHECK_THROWS_AS(intersect_planes(UnitVec3::x_axis(), -UnitVec3::x_axis()),
                  DegenerateIntersection);
}

TEST_CASE("intersect_planes output is orthogonal to both inputs") {
  RandomStream rs(31);
  for (int i = 0; i < 500; ++i) {
    const UnitVec3 n1 = sample_unit_sphere(rs);
    const UnitVec3 n2 = sample_unit_sphere(rs);
    if (std::fabs(std::sin(n1.angle_to(n2))) < 1e-3) continue;
    const UnitVec3 axis = intersect_planes(n1, n2);
    CHECK(std::fabs(axis.dot(n1)) < 1e-9);
    CHECK(std::fabs(axis.dot(n2)) < 1e-9);
  }
}

TEST_CASE("PlaneAngle canonicalizes into [0, 2*pi)") {
  CHECK(PlaneAngle(kTwoPi).radians() == 0.0);
  CHECK(PlaneAngle(-kHalfPi).radians() == Catch::Approx(3.0 * kHalfPi));
  CHECK(PlaneAngle(5.0 * kPi).radians() == Catch::Approx(kPi));
  for (double raw : {-123.456, 0.0, 7.0, 1e6}) {
    const double r = PlaneAngle(raw).radians();
    CHECK(r >= 0.0);
    CHECK(r < kTwoPi);
  }
  CHECK_THROWS_AS(PlaneAngle(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("folded and axis distances") {
  CHECK(folded_distance(PlaneAngle(0.1), PlaneAngle(kTwoPi - 0.1)) == Catch::Approx(0.2));
  CHECK(folded_distance(PlaneAngle(0.0), PlaneAngle(kPi)) == Catch::Approx(kPi));
  CHECK(axis_distance(PlaneAngle(0.05), PlaneAngle(kPi + 0.1)) == Catch::Approx(0.05));
}

TEST_CASE("sphere sampling is unit and uniform") {
  RandomStream rs(7);
  const int n = 1000000;
  double sx = 0, sy = 0, sz = 0;
  int upper = 0;
  for (int i = 0; i < n; ++i) {
    const UnitVec3 v = sample_unit_sphere(rs);
    const double norm2 = v.x() * v.x() + v.y() * v.y() + v.z() * v.z();
    REQUIRE(std::fabs(norm2 - 1.0) < 1e-9);
    sx += v.x();
    sy += v.y();
    sz += v.z();
    if (v.z() > 0.0) ++upper;
  }
  CHECK(std::fabs(sx / n) < 5e-3);
  CHECK(std::fabs(sy / n) < 5e-3);
  CHECK(std::fabs(sz / n) < 5e-3);
  CHECK(std::fabs(static_cast<double>(upper) / n - 0.5) < 5e-3);
}

TEST_CASE("random streams are reproducible and substreams are independent") {
  RandomStream a(123456);
  RandomStream b(123456);
  for (int i = 0; i < 64; ++i) REQUIRE(a.next_u64() == b.next_u64());

  RandomStream root(5);
  RandomStream s1 = root.substream(1);
  RandomStream s1_again = root.substream(1);
  CHECK(s1.next_u64() == s1_again.next_u64());
  bool all_equal = true;
  RandomStream t1 = root.substream(1);
  RandomStream t2 = root.substream(2);
  for (int i = 0; i < 16; ++i) all_equal = all_equal && (t1.next_u64() == t2.next_u64());
  CHECK_FALSE(all_equal);

  // fixed-seed sphere draws are bit-identical across streams with equal keys
  RandomStream g1(99), g2(99);
  for (int i = 0; i < 100; ++i) {
    const UnitVec3 u = sample_unit_sphere(g1);
    const UnitVec3 w = sample_unit_sphere(g2);
    REQUIRE(u == w);
  }
}
