#pragma once

// Single-round evaluation of the Toner-Bacon and Svozil protocols and their
// nonlocal-box variants, plus Svozil's analytic correlation curve. A round
// stores the complete physical record, including c, regardless of channel;
// what each party can actually see is exposed through box_view.

#include <cassert>
#include <optional>

#include "srvsim/geometry.hpp"

namespace srvsim {

// ClassicalBit: Alice sends c to Bob each round. NonlocalBox: c acts on
// Bob's output but is not itself accessible to him.
enum class ChannelModel { ClassicalBit, NonlocalBox };

enum class Protocol { TB, Svozil, NTB, NS };

inline ChannelModel channel_of(Protocol p) {
  return (p == Protocol::TB || p == Protocol::Svozil) ? ChannelModel::ClassicalBit
                                                      : ChannelModel::NonlocalBox;
}

// Svozil's protocol and its box variant live on the circle; Toner-Bacon and
// its box variant live on the sphere.
inline bool on_circle(Protocol p) { return p == Protocol::Svozil || p == Protocol::NS; }

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::TB: return "tb";
    case Protocol::Svozil: return "svozil";
    case Protocol::NTB: return "ntb";
    case Protocol::NS: return "ns";
  }
  return "?";
}

struct TBRound {
  UnitVec3 lambda1, lambda2;
  UnitVec3 a, b;
  SignBit alpha, beta, c;
  ChannelModel channel;
};

// alpha = -sgn(a.l1), c = sgn(a.l1) sgn(a.l2), beta = sgn(b.(l1 + c l2)).
// beta uses the distributed form b.l1 + c*(b.l2): the two terms carry equal
// signs whenever they matter for a = b, which keeps perfect anticorrelation
// exact rather than approximate.
inline TBRound tb_round(const UnitVec3& a, const UnitVec3& b, const UnitVec3& lambda1,
                        const UnitVec3& lambda2, ChannelModel channel) {
  const SignBit s1 = sgn(a.dot(lambda1));
  const SignBit c = s1 * sgn(a.dot(lambda2));
  const SignBit beta = sgn(b.dot(lambda1) + static_cast<double>(c.value()) * b.dot(lambda2));
  return TBRound{lambda1, lambda2, a, b, -s1, beta, c, channel};
}

struct SvozilRound {
  PlaneAngle lambda;  // the single shared angle
  PlaneAngle omega;   // fixed shift, Delta = lambda + omega
  PlaneAngle a, b;
  SignBit alpha, beta, c;
  ChannelModel channel;

  PlaneAngle delta_angle() const { return lambda + omega; }
};

// Circle analogue of tb_round with Delta(omega) = lambda + omega. Formulas
// are evaluated on the explicit 2-D unit vectors so the sgn(0) = +1
// convention applies uniformly. omega = 0 forces c = +1 (a squared sign),
// so lambda + c*Delta never degenerates to the zero vector.
inline SvozilRound svozil_round(PlaneAngle a, PlaneAngle b, PlaneAngle lambda, PlaneAngle omega,
                                ChannelModel channel) {
  if (omega.radians() > kHalfPi) {
    throw OutOfRange("svozil_round: omega must lie in [0, pi/2]");
  }
  const UnitVec3 av = a.unit_xy();
  const UnitVec3 bv = b.unit_xy();
  const UnitVec3 lv = lambda.unit_xy();
  const UnitVec3 dv = (lambda + omega).unit_xy();
  const SignBit s1 = sgn(av.dot(lv));
  const SignBit c = s1 * sgn(av.dot(dv));
  assert(omega.radians() != 0.0 || c == SignBit::plus());
  const SignBit beta = sgn(bv.dot(lv) + static_cast<double>(c.value()) * bv.dot(dv));
  return SvozilRound{lambda, omega, a, b, -s1, beta, c, channel};
}

// Svozil's five-branch piecewise-linear correlation for theta in [0, pi] and
// omega in [0, pi/2]; branch boundaries are implemented exactly as printed
// (the function is continuous, so adjacent branches agree there anyway).
// omega = 0 collapses to the classical line 2*theta/pi - 1.
inline double svozil_E_analytic(double theta, double omega) {
  if (!(theta >= 0.0 && theta <= kPi)) {
    throw OutOfRange("svozil_E_analytic: theta must lie in [0, pi]");
  }
  if (!(omega >= 0.0 && omega <= kHalfPi)) {
    throw OutOfRange("svozil_E_analytic: omega must lie in [0, pi/2]");
  }
  const double half = 0.5 * omega;
  if (theta <= half) {
    return -1.0;
  }
  if (theta <= 0.5 * (kPi - omega)) {
    return -1.0 + (2.0 / kPi) * (theta - half);
  }
  if (theta <= 0.5 * (kPi + omega)) {
    return -2.0 * (1.0 - (2.0 / kPi) * theta);
  }
  if (theta <= kPi - half) {
    return 1.0 + (2.0 / kPi) * (theta - kPi + half);
  }
  return 1.0;
}

// What each party saw in a round. Alice never sees beta (no back-channel);
// Bob sees c only when the round was played over the classical channel.
struct TBAliceView {
  UnitVec3 a;
  SignBit alpha;
  UnitVec3 lambda1, lambda2;
};

struct TBBobView {
  UnitVec3 b;
  SignBit beta;
  std::optional<SignBit> cbit;
  UnitVec3 lambda1, lambda2;
};

struct TBRoundView {
  TBAliceView alice_view;
  TBBobView bob_view;
};

inline TBRoundView box_view(const TBRound& r) {
  std::optional<SignBit> cbit;
  if (r.channel == ChannelModel::ClassicalBit) cbit = r.c;
  return TBRoundView{{r.a, r.alpha, r.lambda1, r.lambda2},
                     {r.b, r.beta, cbit, r.lambda1, r.lambda2}};
}

struct SvozilAliceView {
  PlaneAngle a;
  SignBit alpha;
  PlaneAngle lambda, delta_angle;
};

struct SvozilBobView {
  PlaneAngle b;
  SignBit beta;
  std::optional<SignBit> cbit;
  PlaneAngle lambda, delta_angle;
};

struct SvozilRoundView {
  SvozilAliceView alice_view;
  SvozilBobView bob_view;
};

inline SvozilRoundView box_view(const SvozilRound& r) {
  std::optional<SignBit> cbit;
  if (r.channel == ChannelModel::ClassicalBit) cbit = r.c;
  return SvozilRoundView{{r.a, r.alpha, r.lambda, r.delta_angle()},
                         {r.b, r.beta, cbit, r.lambda, r.delta_angle()}};
}

}  // namespace srvsim
