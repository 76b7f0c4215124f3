#pragma once

// Adversarial sweep schedules and everything Bob needs to reconstruct
// Alice's measurement direction from them: flip detection in cbit or output
// sequences, plane-normal recovery, c-inference from his own outputs under
// the box channel, sign resolution from one disclosed Alice output, and the
// end-to-end pipelines for all four protocols.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "srvsim/protocols.hpp"

namespace srvsim {

// The c (or beta) sequence never changed sign: the swept plane carries no
// information about this Alice setting.
struct NoFlip : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The flip pattern is inconsistent with a single repeated Alice setting.
struct AmbiguousFlips : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The disclosed round cannot separate the two hemispheres.
struct IndiscriminateDisclosure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No sweep produced usable flips; cannot happen for a unit Alice setting.
struct Unlocatable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SweepGeometry { XYPlane, XZPlane, YZPlane, Circle };

// AdjacentOffset pairs lambda1 at angle k*delta with lambda2 one step ahead;
// OrthogonalPair puts lambda2 a quarter turn ahead; SvozilShift is the circle
// pairing Delta = lambda + omega.
enum class SweepPairing { AdjacentOffset, OrthogonalPair, SvozilShift };

struct SweepEntry {
  UnitVec3 lambda1;
  UnitVec3 lambda2;  // circle schedules store the embedded Delta direction here
};

struct SweepSchedule {
  SweepGeometry geometry = SweepGeometry::XYPlane;
  SweepPairing pairing = SweepPairing::AdjacentOffset;
  std::size_t resolution = 0;  // N; step delta = pi/N
  double delta = 0.0;
  double omega = 0.0;  // SvozilShift only
  std::vector<SweepEntry> entries;  // 2N entries covering a full revolution

  std::size_t size() const { return entries.size(); }
  bool is_circle() const { return geometry == SweepGeometry::Circle; }

  Axis rotation_axis() const {
    switch (geometry) {
      case SweepGeometry::XYPlane: return Axis::Z;
      case SweepGeometry::XZPlane: return Axis::Y;
      case SweepGeometry::YZPlane: return Axis::X;
      case SweepGeometry::Circle: return Axis::Z;
    }
    throw std::logic_error("SweepSchedule: invalid geometry");
  }

  // Direction in the sweep plane at angle t from the sweep's start vector.
  UnitVec3 plane_direction(double t) const {
    const double c = std::cos(t);
    const double s = std::sin(t);
    switch (geometry) {
      case SweepGeometry::XYPlane:
      case SweepGeometry::Circle: return UnitVec3(c, s, 0.0);
      case SweepGeometry::XZPlane: return UnitVec3(s, 0.0, c);
      case SweepGeometry::YZPlane: return UnitVec3(0.0, c, s);
    }
    throw std::logic_error("SweepSchedule: invalid geometry");
  }

  // In-plane angle of a direction, measured from the sweep's start vector.
  double in_plane_angle(const UnitVec3& v) const {
    switch (geometry) {
      case SweepGeometry::XYPlane:
      case SweepGeometry::Circle: return std::atan2(v.y(), v.x());
      case SweepGeometry::XZPlane: return std::atan2(v.x(), v.z());
      case SweepGeometry::YZPlane: return std::atan2(v.z(), v.y());
    }
    throw std::logic_error("SweepSchedule: invalid geometry");
  }

  PlaneAngle circle_lambda(std::size_t k) const {
    return PlaneAngle(static_cast<double>(k) * delta);
  }
  PlaneAngle circle_delta(std::size_t k) const { return circle_lambda(k) + omega; }
};

// Ordered SRV collection rotating by delta = pi/N per entry; 2N entries
// cover the full revolution so flip detection can wrap around.
inline SweepSchedule generate_sweep(SweepGeometry geometry, SweepPairing pairing,
                                    std::size_t resolution, double omega = 0.0) {
  if (resolution < 4) {
    throw std::invalid_argument("generate_sweep: resolution must be >= 4");
  }
  if (resolution > (1u << 24)) {
    throw std::invalid_argument("generate_sweep: resolution too large");
  }
  const bool circle = geometry == SweepGeometry::Circle;
  if (circle != (pairing == SweepPairing::SvozilShift)) {
    throw std::invalid_argument("generate_sweep: SvozilShift pairs only with the circle geometry");
  }
  if (pairing == SweepPairing::SvozilShift && !(omega >= 0.0 && omega <= kHalfPi)) {
    throw OutOfRange("generate_sweep: omega must lie in [0, pi/2]");
  }

  SweepSchedule s;
  s.geometry = geometry;
  s.pairing = pairing;
  s.resolution = resolution;
  s.delta = kPi / static_cast<double>(resolution);
  s.omega = pairing == SweepPairing::SvozilShift ? omega : 0.0;

  const std::size_t count = 2 * resolution;
  std::vector<UnitVec3> base;
  base.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    base.push_back(s.plane_direction(PlaneAngle(static_cast<double>(k) * s.delta).radians()));
  }

  // lambda2 reuses the shared base directions wherever the pairing offset is
  // a whole number of steps: the pairing (lambda1_l, lambda2_{l+1}) means
  // lambda2 of entry l IS lambda1 of entry l+1, and sharing the object keeps
  // sgn ties consistent across entries (one crossing, one flip).
  s.entries.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    UnitVec3 lambda2 = base[k];
    switch (pairing) {
      case SweepPairing::AdjacentOffset:
        lambda2 = base[(k + 1) % count];
        break;
      case SweepPairing::OrthogonalPair:
        if (resolution % 2 == 0) {
          lambda2 = base[(k + resolution / 2) % count];
        } else {
          lambda2 =
              s.plane_direction(PlaneAngle(static_cast<double>(k) * s.delta + kHalfPi).radians());
        }
        break;
      case SweepPairing::SvozilShift:
        lambda2 =
            s.plane_direction(PlaneAngle(static_cast<double>(k) * s.delta + omega).radians());
        break;
    }
    s.entries.push_back(SweepEntry{base[k], lambda2});
  }
  return s;
}

inline SweepSchedule generate_circle_sweep(double omega, std::size_t resolution) {
  return generate_sweep(SweepGeometry::Circle, SweepPairing::SvozilShift, resolution, omega);
}

// Fixed: Bob keeps one setting for the whole sweep. AdaptiveRevealing: Bob
// sets b = lambda2 (sphere) or Delta (circle) each round, which lies halfway
// between lambda+ and -lambda-, so beta reproduces c on every entry.
struct BobStrategy {
  enum class Kind { Fixed, AdaptiveRevealing };

  Kind kind = Kind::AdaptiveRevealing;
  std::optional<UnitVec3> fixed_b;          // engaged for Fixed; circle settings embedded
  std::optional<PlaneAngle> fixed_b_angle;  // engaged for circle Fixed settings

  static BobStrategy fixed(const UnitVec3& b) { return BobStrategy{Kind::Fixed, b, std::nullopt}; }
  static BobStrategy fixed(PlaneAngle b) { return BobStrategy{Kind::Fixed, b.unit_xy(), b}; }
  static BobStrategy adaptive_revealing() {
    return BobStrategy{Kind::AdaptiveRevealing, std::nullopt, std::nullopt};
  }

  std::string describe() const {
    return kind == Kind::AdaptiveRevealing ? "adaptive-revealing" : "fixed";
  }
};

struct TranscriptEntry {
  std::size_t index = 0;
  UnitVec3 lambda1{1.0, 0.0, 0.0};
  UnitVec3 lambda2{0.0, 1.0, 0.0};
  UnitVec3 bob_setting{1.0, 0.0, 0.0};
  SignBit alpha = SignBit::plus();
  SignBit beta = SignBit::plus();
  std::optional<SignBit> cbit;  // engaged iff the round went over the classical channel
};

// Per-round record of one sweep under a fixed Alice setting. Circle sweeps
// embed their angles in the xy-plane, so one record layout serves both.
struct Transcript {
  SweepSchedule schedule;
  ChannelModel channel = ChannelModel::ClassicalBit;
  BobStrategy strategy;
  UnitVec3 alice_setting{0.0, 0.0, 1.0};
  std::vector<TranscriptEntry> entries;

  int cbits_per_round() const { return channel == ChannelModel::ClassicalBit ? 1 : 0; }
  std::size_t total_cbits() const {
    return entries.size() * static_cast<std::size_t>(cbits_per_round());
  }
};

inline Transcript run_sweep(const SweepSchedule& schedule, const UnitVec3& alice_setting,
                            const BobStrategy& strategy, ChannelModel channel) {
  if (schedule.is_circle()) {
    throw std::invalid_argument("run_sweep: circle schedules take a circle Alice setting");
  }
  Transcript tr{schedule, channel, strategy, alice_setting, {}};
  tr.entries.reserve(schedule.size());
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const SweepEntry& e = schedule.entries[k];
    const UnitVec3 b = strategy.kind == BobStrategy::Kind::Fixed ? *strategy.fixed_b : e.lambda2;
    const TBRound r = tb_round(alice_setting, b, e.lambda1, e.lambda2, channel);
    std::optional<SignBit> cbit;
    if (channel == ChannelModel::ClassicalBit) cbit = r.c;
    tr.entries.push_back(TranscriptEntry{k, e.lambda1, e.lambda2, b, r.alpha, r.beta, cbit});
  }
  return tr;
}

inline Transcript run_sweep(const SweepSchedule& schedule, PlaneAngle alice_setting,
                            const BobStrategy& strategy, ChannelModel channel) {
  if (!schedule.is_circle()) {
    throw std::invalid_argument("run_sweep: sphere schedules take a sphere Alice setting");
  }
  if (strategy.kind == BobStrategy::Kind::Fixed && !strategy.fixed_b_angle) {
    throw std::invalid_argument("run_sweep: circle schedules take a circle Fixed(b) strategy");
  }
  Transcript tr{schedule, channel, strategy, alice_setting.unit_xy(), {}};
  tr.entries.reserve(schedule.size());
  const PlaneAngle omega(schedule.omega);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const PlaneAngle b_angle = strategy.kind == BobStrategy::Kind::Fixed
                                   ? *strategy.fixed_b_angle
                                   : schedule.circle_delta(k);
    const SvozilRound r = svozil_round(alice_setting, b_angle, schedule.circle_lambda(k), omega, channel);
    std::optional<SignBit> cbit;
    if (channel == ChannelModel::ClassicalBit) cbit = r.c;
    tr.entries.push_back(TranscriptEntry{k, schedule.entries[k].lambda1, schedule.entries[k].lambda2,
                                         b_angle.unit_xy(), r.alpha, r.beta, cbit});
  }
  return tr;
}

// The unique c consistent with the observed beta, or nullopt when beta is
// c-independent. beta is c-independent exactly when sgn(b.lambda+) equals
// sgn(b.lambda-), i.e. b lies in one of the two quadrants flanked by
// (lambda+, lambda-) or their opposites. The comparison replays the round's
// own arithmetic, so a returned value is always the true c.
inline std::optional<SignBit> infer_c_from_beta(const UnitVec3& b, const UnitVec3& lambda1,
                                                const UnitVec3& lambda2, SignBit beta) {
  const double d1 = b.dot(lambda1);
  const double d2 = b.dot(lambda2);
  const SignBit beta_plus = sgn(d1 + 1.0 * d2);
  const SignBit beta_minus = sgn(d1 + (-1.0) * d2);
  if (beta_plus == beta_minus) return std::nullopt;
  return beta == beta_plus ? SignBit::plus() : SignBit::minus();
}

// The c sequence as Bob can obtain it: read from the cbit on the classical
// channel, inferred from (b, lambda1, lambda2, beta) under the box channel.
inline std::vector<std::optional<SignBit>> observed_c_sequence(const Transcript& tr) {
  std::vector<std::optional<SignBit>> out;
  out.reserve(tr.entries.size());
  for (const TranscriptEntry& e : tr.entries) {
    if (e.cbit) {
      out.push_back(e.cbit);
    } else {
      out.push_back(infer_c_from_beta(e.bob_setting, e.lambda1, e.lambda2, e.beta));
    }
  }
  return out;
}

inline std::vector<SignBit> full_c_sequence(const Transcript& tr) {
  std::vector<SignBit> out;
  out.reserve(tr.entries.size());
  for (const auto& oc : observed_c_sequence(tr)) {
    if (!oc) {
      throw AmbiguousFlips("full_c_sequence: c not recoverable on every entry");
    }
    out.push_back(*oc);
  }
  return out;
}

// Indices i where bits[i] differs from its cyclic predecessor bits[i-1].
inline std::vector<std::size_t> detect_flips(std::span<const SignBit> bits) {
  if (bits.empty()) throw std::invalid_argument("detect_flips: empty sequence");
  const std::size_t n = bits.size();
  std::vector<std::size_t> flips;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bits[i] == bits[(i + n - 1) % n])) flips.push_back(i);
  }
  return flips;
}

namespace detail {

// Entries opposite to both cyclic neighbours: every pair of consecutive flip
// indices (f, f+1) flags the isolated entry f.
inline std::vector<std::size_t> isolated_entries(std::span<const std::size_t> flips,
                                                 std::size_t count) {
  std::vector<std::size_t> out;
  for (std::size_t f : flips) {
    const std::size_t next = (f + 1) % count;
    if (std::find(flips.begin(), flips.end(), next) != flips.end()) out.push_back(f);
  }
  return out;
}

}  // namespace detail

// Normal of the plane containing Alice's setting, read off an AdjacentOffset
// sweep: the isolated c = -1 entries mark where sgn(a.lambda) changes along
// the sweep, and the two crossings sit half a revolution apart. Returns the
// mid-bin sweep direction at the first crossing; the +- ambiguity is
// resolved downstream.
inline UnitVec3 reconstruct_normal(const SweepSchedule& schedule,
                                   std::span<const std::size_t> flips) {
  if (schedule.is_circle()) {
    throw std::invalid_argument("reconstruct_normal: circle sweeps use reconstruct_circle_axis");
  }
  if (schedule.pairing != SweepPairing::AdjacentOffset) {
    throw std::invalid_argument("reconstruct_normal: block pairings use normal_candidates");
  }
  if (flips.empty()) throw NoFlip("reconstruct_normal: constant c sequence");
  const std::vector<std::size_t> crossings = detail::isolated_entries(flips, schedule.size());
  if (crossings.size() != 2) {
    throw AmbiguousFlips("reconstruct_normal: expected exactly two crossings per revolution");
  }
  const std::size_t spacing = crossings[1] - crossings[0];
  if (spacing + 1 < schedule.resolution || spacing > schedule.resolution + 1) {
    throw AmbiguousFlips("reconstruct_normal: crossings are not antipodal");
  }
  const double mid = (static_cast<double>(crossings[0]) + 0.5) * schedule.delta;
  return schedule.plane_direction(PlaneAngle(mid).radians());
}

// Candidate plane normals implied by the flips. AdjacentOffset pins a single
// direction; OrthogonalPair block boundaries alternate between lambda1- and
// lambda2-crossings, leaving two candidates a quarter turn apart that a
// consistency scorer must disambiguate.
inline std::vector<UnitVec3> normal_candidates(const SweepSchedule& schedule,
                                               std::span<const std::size_t> flips) {
  if (schedule.is_circle()) {
    throw std::invalid_argument("normal_candidates: circle sweeps use reconstruct_circle_axis");
  }
  if (flips.empty()) throw NoFlip("normal_candidates: constant c sequence");
  if (schedule.pairing == SweepPairing::AdjacentOffset) {
    return {reconstruct_normal(schedule, flips)};
  }
  const double mid = (static_cast<double>(flips.front()) - 0.5) * schedule.delta;
  return {schedule.plane_direction(PlaneAngle(mid).radians()),
          schedule.plane_direction(PlaneAngle(mid + kHalfPi).radians())};
}

// Alice's circle direction modulo pi from a SvozilShift sweep. Each flip
// boundary localizes the direction within one bin: a +1 -> -1 boundary marks
// sgn(a.Delta) changing, a -1 -> +1 boundary marks sgn(a.lambda) changing.
// All boundaries must agree to within one bin.
inline PlaneAngle reconstruct_circle_axis(const SweepSchedule& schedule,
                                          std::span<const SignBit> c_seq) {
  if (!schedule.is_circle()) {
    throw std::invalid_argument("reconstruct_circle_axis: takes a circle schedule");
  }
  if (c_seq.size() != schedule.size()) {
    throw std::invalid_argument("reconstruct_circle_axis: sequence/schedule size mismatch");
  }
  const std::vector<std::size_t> flips = detect_flips(c_seq);
  if (flips.empty()) throw NoFlip("reconstruct_circle_axis: constant c sequence");

  const std::size_t count = schedule.size();
  std::vector<double> candidates;  // each in [0, pi)
  candidates.reserve(flips.size());
  for (std::size_t f : flips) {
    const bool plus_to_minus = c_seq[(f + count - 1) % count] == SignBit::plus();
    const double boundary = (static_cast<double>(f) - 0.5) * schedule.delta;
    double cand = boundary + kHalfPi + (plus_to_minus ? schedule.omega : 0.0);
    cand = std::fmod(cand, kPi);
    if (cand < 0.0) cand += kPi;
    candidates.push_back(cand);
  }

  // Circular mean on the doubled angles (axis = direction mod pi).
  double sx = 0.0, cx = 0.0;
  for (double cand : candidates) {
    sx += std::sin(2.0 * cand);
    cx += std::cos(2.0 * cand);
  }
  double mean = 0.5 * std::atan2(sx, cx);
  if (mean < 0.0) mean += kPi;
  const PlaneAngle axis(mean);
  for (double cand : candidates) {
    if (axis_distance(PlaneAngle(cand), axis) > schedule.delta + 1e-9) {
      throw AmbiguousFlips("reconstruct_circle_axis: boundaries disagree");
    }
  }
  return axis;
}

struct AxisScore {
  UnitVec3 axis{0.0, 0.0, 1.0};
  std::size_t agreement = 0;
  std::size_t total = 0;
  bool underdetermined = false;
};

// Exhaustive grid search for the axis whose predicted c sequences agree most
// with the observed ones. Agreement is counted over every entry whose c is
// observable or inferable; candidates are scanned in a fixed order and ties
// keep the first maximum, so the result is deterministic. Underdetermined
// when the observations carry no sign variation at all or when the
// maximizers do not cluster around a single axis.
inline AxisScore score_axis_candidates(std::span<const Transcript> transcripts, double grid_step) {
  if (transcripts.empty()) {
    throw std::invalid_argument("score_axis_candidates: no transcripts");
  }
  if (!(grid_step > 0.0) || grid_step > kHalfPi) {
    throw std::invalid_argument("score_axis_candidates: grid step must lie in (0, pi/2]");
  }

  struct Observation {
    UnitVec3 lambda1, lambda2;
    SignBit c;
  };
  std::vector<Observation> obs;
  double delta_max = 0.0;
  for (const Transcript& tr : transcripts) {
    delta_max = std::max(delta_max, tr.schedule.delta);
    const auto seq = observed_c_sequence(tr);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (seq[k]) {
        obs.push_back(Observation{tr.entries[k].lambda1, tr.entries[k].lambda2, *seq[k]});
      }
    }
  }
  if (obs.empty()) {
    throw std::invalid_argument("score_axis_candidates: no observable c entries");
  }
  bool has_variation = false;
  for (const Observation& o : obs) {
    if (!(o.c == obs.front().c)) {
      has_variation = true;
      break;
    }
  }

  const std::size_t n_polar = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(kPi / grid_step)));
  const std::size_t n_azimuth = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(kTwoPi / grid_step)));

  std::size_t best_agreement = 0;
  std::vector<UnitVec3> maximizers;
  const std::size_t total = obs.size();
  for (std::size_t i = 0; i <= n_polar; ++i) {
    const double t = kPi * static_cast<double>(i) / static_cast<double>(n_polar);
    const double st = std::sin(t);
    const double ct = std::cos(t);
    for (std::size_t j = 0; j < n_azimuth; ++j) {
      const double phi = kTwoPi * static_cast<double>(j) / static_cast<double>(n_azimuth);
      const UnitVec3 v(st * std::cos(phi), st * std::sin(phi), ct);
      // Branch-and-bound: stop once this candidate can no longer beat or tie
      // the current best.
      const std::size_t budget = total - best_agreement;
      std::size_t agreement = 0;
      std::size_t mismatches = 0;
      for (const Observation& o : obs) {
        const SignBit predicted = sgn(v.dot(o.lambda1)) * sgn(v.dot(o.lambda2));
        if (predicted == o.c) {
          ++agreement;
        } else if (++mismatches > budget) {
          break;
        }
      }
      if (mismatches > budget) continue;
      if (agreement > best_agreement) {
        best_agreement = agreement;
        maximizers.clear();
        maximizers.push_back(v);
      } else if (agreement == best_agreement) {
        maximizers.push_back(v);
      }
    }
  }

  AxisScore score;
  score.axis = maximizers.front();
  score.agreement = best_agreement;
  score.total = total;
  double spread = 0.0;
  for (const UnitVec3& m : maximizers) {
    spread = std::max(spread, m.axis_angle_to(maximizers.front()));
  }
  score.underdetermined = !has_variation || spread > 2.0 * (grid_step + delta_max);
  return score;
}

// Keep the axis when -sgn(axis.lambda_r) matches the disclosed alpha_r, flip
// it otherwise. The disclosed direction must separate the hemispheres at the
// estimate's uncertainty.
inline UnitVec3 resolve_sign(const UnitVec3& axis, const UnitVec3& lambda_r, SignBit alpha_r,
                             double uncertainty) {
  if (!(std::fabs(axis.dot(lambda_r)) > std::sin(uncertainty))) {
    throw IndiscriminateDisclosure("resolve_sign: disclosed round does not separate hemispheres");
  }
  return -sgn(axis.dot(lambda_r)) == alpha_r ? axis : -axis;
}

inline PlaneAngle resolve_sign_circle(PlaneAngle axis, PlaneAngle lambda_r, SignBit alpha_r,
                                      double uncertainty) {
  const double d = axis.unit_xy().dot(lambda_r.unit_xy());
  if (!(std::fabs(d) > std::sin(uncertainty))) {
    throw IndiscriminateDisclosure("resolve_sign: disclosed round does not separate semicircles");
  }
  return -sgn(d) == alpha_r ? axis : axis + kPi;
}

enum class RotationSense { Clockwise, CounterClockwise };

struct QuarterPiDetection {
  // Clockwise: Alice's in-plane angle is phi_b + pi/4 (mod pi);
  // counterclockwise: phi_b - pi/4 (mod pi). Either way the separation
  // |phi_a - phi_b| is pi/4 or 3*pi/4.
  RotationSense sense = RotationSense::Clockwise;
  PlaneAngle azimuth_mod_pi;
};

// Detector for the quarter-turn relation between the settings: with a fixed
// b under the box channel, beta constant on each revealing quadrant across
// the whole sweep pins |phi_a - phi_b| to pi/4 or 3*pi/4 together with the
// rotation sense. Any violating entry, or a transcript with no revealing
// entries, yields no detection.
inline std::optional<QuarterPiDetection> detect_quarter_pi(const Transcript& tr) {
  if (tr.strategy.kind != BobStrategy::Kind::Fixed) {
    throw std::invalid_argument("detect_quarter_pi: requires the Fixed(b) strategy");
  }
  if (tr.channel != ChannelModel::NonlocalBox) {
    throw std::invalid_argument("detect_quarter_pi: requires a box-channel sweep");
  }
  const UnitVec3 b = *tr.strategy.fixed_b;

  bool pattern_cw_ok = true;   // beta = -1 on (lambda+, -lambda-), +1 on (-lambda+, lambda-)
  bool pattern_ccw_ok = true;  // the reverse
  std::size_t revealing = 0;
  for (const TranscriptEntry& e : tr.entries) {
    const double d1 = b.dot(e.lambda1);
    const double d2 = b.dot(e.lambda2);
    const SignBit s_plus = sgn(d1 + d2);
    const SignBit s_minus = sgn(d1 - d2);
    if (s_plus == s_minus) continue;  // dead zone, beta carries no c
    ++revealing;
    const SignBit expect_cw = s_plus == SignBit::plus() ? SignBit::minus() : SignBit::plus();
    if (!(e.beta == expect_cw)) pattern_cw_ok = false;
    if (!(e.beta == -expect_cw)) pattern_ccw_ok = false;
    if (!pattern_cw_ok && !pattern_ccw_ok) return std::nullopt;
  }
  if (revealing == 0 || pattern_cw_ok == pattern_ccw_ok) return std::nullopt;

  const RotationSense sense =
      pattern_cw_ok ? RotationSense::Clockwise : RotationSense::CounterClockwise;
  const double shift = sense == RotationSense::Clockwise ? kPi / 4.0 : -kPi / 4.0;
  double azimuth = std::fmod(tr.schedule.in_plane_angle(b) + shift, kPi);
  if (azimuth < 0.0) azimuth += kPi;
  return QuarterPiDetection{sense, PlaneAngle(azimuth)};
}

struct Disclosure {
  UnitVec3 lambda_r;
  SignBit alpha_r;
};

struct CircleDisclosure {
  PlaneAngle lambda_r;
  SignBit alpha_r;
};

// Reconstructed axis with its +- sign status. Sphere attacks carry a
// UnitVec3 axis; circle attacks carry the direction modulo pi.
struct DirectionEstimate {
  std::variant<UnitVec3, PlaneAngle> axis = PlaneAngle();
  double uncertainty = 0.0;
  bool sign_resolved = false;
  std::optional<std::variant<UnitVec3, PlaneAngle>> signed_direction;

  bool is_sphere() const { return std::holds_alternative<UnitVec3>(axis); }
  const UnitVec3& sphere_axis() const { return std::get<UnitVec3>(axis); }
  PlaneAngle circle_axis() const { return std::get<PlaneAngle>(axis); }
  const UnitVec3& sphere_direction() const { return std::get<UnitVec3>(*signed_direction); }
  PlaneAngle circle_direction() const { return std::get<PlaneAngle>(*signed_direction); }
};

struct AttackOutcome {
  DirectionEstimate estimate;
  std::vector<Transcript> transcripts;
  std::size_t rounds = 0;
  std::size_t cbits = 0;
  bool used_grid_scoring = false;
};

namespace detail {

inline void account(AttackOutcome& out) {
  out.rounds = 0;
  out.cbits = 0;
  for (const Transcript& tr : out.transcripts) {
    out.rounds += tr.entries.size();
    out.cbits += tr.total_cbits();
  }
}

}  // namespace detail

// End-to-end sphere attack (TB over the classical channel, NTB over the box
// channel). Runs xy and xz AdjacentOffset sweeps with the adaptive-revealing
// Bob, recovers the c sequences (read or inferred, identical either way),
// turns flips into plane normals and intersects them. The yz sweep is added
// when a sweep saw no flip or the two normals constrain nearly the same
// plane; grid scoring is the last resort on ambiguity. Reported uncertainty
// is 2*delta.
inline AttackOutcome attack_pipeline(Protocol proto, const UnitVec3& alice_setting,
                                     std::size_t resolution,
                                     std::optional<Disclosure> disclosure = std::nullopt) {
  if (on_circle(proto)) {
    throw std::invalid_argument("attack_pipeline: circle protocols take a circle setting");
  }
  if (resolution < 8) {
    throw std::invalid_argument("attack_pipeline: resolution must be >= 8");
  }
  const ChannelModel channel = channel_of(proto);
  const double delta = kPi / static_cast<double>(resolution);
  AttackOutcome out;
  bool ambiguous = false;
  std::vector<UnitVec3> normals;

  auto run_one = [&](SweepGeometry g) {
    const SweepSchedule schedule = generate_sweep(g, SweepPairing::AdjacentOffset, resolution);
    Transcript tr = run_sweep(schedule, alice_setting, BobStrategy::adaptive_revealing(), channel);
    try {
      const std::vector<SignBit> c_seq = full_c_sequence(tr);
      normals.push_back(reconstruct_normal(schedule, detect_flips(c_seq)));
    } catch (const NoFlip&) {
      // Alice's setting is orthogonal to this sweep plane; other sweeps decide.
    } catch (const AmbiguousFlips&) {
      ambiguous = true;
    }
    out.transcripts.push_back(std::move(tr));
  };

  run_one(SweepGeometry::XYPlane);
  run_one(SweepGeometry::XZPlane);

  auto best_pair = [&]() -> std::pair<double, std::array<std::size_t, 2>> {
    double best = -1.0;
    std::array<std::size_t, 2> idx{0, 0};
    for (std::size_t i = 0; i < normals.size(); ++i) {
      for (std::size_t j = i + 1; j < normals.size(); ++j) {
        const double s = std::sin(normals[i].angle_to(normals[j]));
        if (s > best) {
          best = s;
          idx = {i, j};
        }
      }
    }
    return {best, idx};
  };

  auto [cross, pair_idx] = best_pair();
  if (normals.size() < 2 || cross < 0.5) {
    run_one(SweepGeometry::YZPlane);
    std::tie(cross, pair_idx) = best_pair();
  }

  std::optional<UnitVec3> axis;
  if (!ambiguous && normals.size() >= 2) {
    try {
      axis = intersect_planes(normals[pair_idx[0]], normals[pair_idx[1]]);
    } catch (const DegenerateIntersection&) {
      ambiguous = true;
    }
  }
  if (!axis) {
    if (normals.empty() && !ambiguous) {
      throw Unlocatable("attack_pipeline: no sweep produced a flip");
    }
    const AxisScore score = score_axis_candidates(out.transcripts, 0.5 * delta);
    if (score.underdetermined) {
      throw Unlocatable("attack_pipeline: transcripts do not determine an axis");
    }
    axis = score.axis;
    out.used_grid_scoring = true;
  }

  const double uncertainty = 2.0 * delta;
  const Disclosure d = disclosure
                           ? *disclosure
                           : Disclosure{*axis, -sgn(alice_setting.dot(*axis))};
  const UnitVec3 signed_direction = resolve_sign(*axis, d.lambda_r, d.alpha_r, uncertainty);

  out.estimate.axis = *axis;
  out.estimate.uncertainty = uncertainty;
  out.estimate.sign_resolved = true;
  out.estimate.signed_direction = signed_direction;
  detail::account(out);
  return out;
}

// End-to-end circle attack (Svozil over the classical channel, NS over the
// box channel): one SvozilShift sweep, flip boundaries to an axis modulo pi,
// sign from the disclosed round. omega = 0 would make the c sequence
// constant, so it is rejected.
inline AttackOutcome attack_pipeline(Protocol proto, PlaneAngle alice_setting, PlaneAngle omega,
                                     std::size_t resolution,
                                     std::optional<CircleDisclosure> disclosure = std::nullopt) {
  if (!on_circle(proto)) {
    throw std::invalid_argument("attack_pipeline: sphere protocols take a sphere setting");
  }
  if (resolution < 8) {
    throw std::invalid_argument("attack_pipeline: resolution must be >= 8");
  }
  if (!(omega.radians() > 0.0 && omega.radians() <= kHalfPi)) {
    throw std::invalid_argument("attack_pipeline: omega must lie in (0, pi/2]");
  }
  const ChannelModel channel = channel_of(proto);
  const SweepSchedule schedule = generate_circle_sweep(omega.radians(), resolution);
  AttackOutcome out;
  out.transcripts.push_back(
      run_sweep(schedule, alice_setting, BobStrategy::adaptive_revealing(), channel));

  PlaneAngle axis;
  try {
    axis = reconstruct_circle_axis(schedule, full_c_sequence(out.transcripts.front()));
  } catch (const NoFlip&) {
    // possible when omega < delta: the c = -1 strips are narrower than the
    // sweep step and can fall between grid points
    throw Unlocatable("attack_pipeline: circle sweep produced no flip (omega below the sweep step?)");
  }

  const double uncertainty = 2.0 * schedule.delta;
  const CircleDisclosure d =
      disclosure ? *disclosure
                 : CircleDisclosure{axis, -sgn(alice_setting.unit_xy().dot(axis.unit_xy()))};
  const PlaneAngle signed_direction = resolve_sign_circle(axis, d.lambda_r, d.alpha_r, uncertainty);

  out.estimate.axis = axis;
  out.estimate.uncertainty = uncertainty;
  out.estimate.sign_resolved = true;
  out.estimate.signed_direction = signed_direction;
  detail::account(out);
  return out;
}

}  // namespace srvsim
