#pragma once

// Monte Carlo estimation of marginals and correlations, correlation-curve
// scans and CHSH scoring. Per-round randomness is keyed by (seed, stream,
// round index) and all tallies are integers, so every estimate is
// bit-identical for any worker count and any partition of the samples.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "srvsim/protocols.hpp"
#include "srvsim/random.hpp"

namespace srvsim {

struct CorrelationEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // unbiased sample sd / sqrt(n)
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::int64_t sum = 0;  // sum of the +-1 outcomes; mean and std_error derive from it
};

struct MarginalEstimate {
  double mean_alpha = 0.0;
  double mean_beta = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

namespace detail {

struct RoundTally {
  std::int64_t alpha = 0;
  std::int64_t beta = 0;
  std::int64_t product = 0;

  RoundTally& operator+=(const RoundTally& o) {
    alpha += o.alpha;
    beta += o.beta;
    product += o.product;
    return *this;
  }
};

inline unsigned effective_workers(unsigned requested, std::uint64_t n) {
  unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  if (w > n) w = static_cast<unsigned>(n);
  return std::max(1u, w);
}

// Round i draws from root.substream(i); integer partial sums make the result
// independent of the [lo, hi) chunking.
template <typename RoundFn>
RoundTally tally_rounds(const RandomStream& root, std::uint64_t n, unsigned workers,
                        RoundFn per_round) {
  workers = effective_workers(workers, n);
  std::vector<RoundTally> parts(workers);
  auto run_chunk = [&](unsigned w) {
    const std::uint64_t lo = n / workers * w + std::min<std::uint64_t>(w, n % workers);
    const std::uint64_t len = n / workers + (w < n % workers ? 1 : 0);
    RoundTally t;
    for (std::uint64_t i = lo; i < lo + len; ++i) {
      RandomStream rs = root.substream(i);
      const std::pair<SignBit, SignBit> ab = per_round(rs);
      t.alpha += ab.first.value();
      t.beta += ab.second.value();
      t.product += (ab.first * ab.second).value();
    }
    parts[w] = t;
  };
  if (workers == 1) {
    run_chunk(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_chunk, w);
    for (auto& th : pool) th.join();
  }
  RoundTally total;
  for (const auto& p : parts) total += p;
  return total;
}

inline CorrelationEstimate make_estimate(std::int64_t sum, std::uint64_t n, std::uint64_t seed) {
  CorrelationEstimate e;
  e.sum = sum;
  e.n = n;
  e.seed = seed;
  e.mean = static_cast<double>(sum) / static_cast<double>(n);
  if (n > 1) {
    const double nn = static_cast<double>(n);
    const double ss = std::max(0.0, nn - static_cast<double>(sum) * static_cast<double>(sum) / nn);
    e.std_error = std::sqrt(ss / (nn - 1.0)) / std::sqrt(nn);
  }
  return e;
}

template <typename RoundFn>
RoundTally tally_protocol(std::uint64_t n, std::uint64_t seed, std::uint64_t stream,
                          unsigned workers, RoundFn per_round) {
  if (n == 0) throw std::invalid_argument("estimator: n must be >= 1");
  return tally_rounds(RandomStream(seed).substream(stream), n, workers, per_round);
}

inline auto sphere_round(Protocol proto, const UnitVec3& a, const UnitVec3& b) {
  const ChannelModel ch = channel_of(proto);
  return [a, b, ch](RandomStream& rs) {
    const UnitVec3 l1 = sample_unit_sphere(rs);
    const UnitVec3 l2 = sample_unit_sphere(rs);
    const TBRound r = tb_round(a, b, l1, l2, ch);
    return std::pair<SignBit, SignBit>(r.alpha, r.beta);
  };
}

inline auto circle_round(Protocol proto, PlaneAngle a, PlaneAngle b, PlaneAngle omega) {
  // validate here, on the caller's thread; per-round throws would escape
  // into the worker pool
  if (omega.radians() > kHalfPi) {
    throw OutOfRange("estimator: omega must lie in [0, pi/2]");
  }
  const ChannelModel ch = channel_of(proto);
  return [a, b, omega, ch](RandomStream& rs) {
    const PlaneAngle lambda = sample_plane_angle(rs);
    const SvozilRound r = svozil_round(a, b, lambda, omega, ch);
    return std::pair<SignBit, SignBit>(r.alpha, r.beta);
  };
}

}  // namespace detail

// <alpha*beta> for the sphere protocols (TB, NTB) at explicit settings.
// `stream` selects an independent substream of the seed; estimates with
// distinct streams are independent draws.
inline CorrelationEstimate estimate_correlation(Protocol proto, const UnitVec3& a,
                                                const UnitVec3& b, std::uint64_t n,
                                                std::uint64_t seed, unsigned workers = 1,
                                                std::uint64_t stream = 0) {
  if (on_circle(proto)) {
    throw std::invalid_argument("estimate_correlation: circle protocols take circle settings");
  }
  const auto t = detail::tally_protocol(n, seed, stream, workers, detail::sphere_round(proto, a, b));
  return detail::make_estimate(t.product, n, seed);
}

// <alpha*beta> for the circle protocols (Svozil, NS).
inline CorrelationEstimate estimate_correlation(Protocol proto, PlaneAngle a, PlaneAngle b,
                                                PlaneAngle omega, std::uint64_t n,
                                                std::uint64_t seed, unsigned workers = 1,
                                                std::uint64_t stream = 0) {
  if (!on_circle(proto)) {
    throw std::invalid_argument("estimate_correlation: sphere protocols take sphere settings");
  }
  const auto t =
      detail::tally_protocol(n, seed, stream, workers, detail::circle_round(proto, a, b, omega));
  return detail::make_estimate(t.product, n, seed);
}

inline MarginalEstimate estimate_marginals(Protocol proto, const UnitVec3& a, const UnitVec3& b,
                                           std::uint64_t n, std::uint64_t seed,
                                           unsigned workers = 1, std::uint64_t stream = 0) {
  if (on_circle(proto)) {
    throw std::invalid_argument("estimate_marginals: circle protocols take circle settings");
  }
  const auto t = detail::tally_protocol(n, seed, stream, workers, detail::sphere_round(proto, a, b));
  const double nn = static_cast<double>(n);
  return MarginalEstimate{static_cast<double>(t.alpha) / nn, static_cast<double>(t.beta) / nn, n,
                          seed};
}

inline MarginalEstimate estimate_marginals(Protocol proto, PlaneAngle a, PlaneAngle b,
                                           PlaneAngle omega, std::uint64_t n, std::uint64_t seed,
                                           unsigned workers = 1, std::uint64_t stream = 0) {
  if (!on_circle(proto)) {
    throw std::invalid_argument("estimate_marginals: sphere protocols take sphere settings");
  }
  const auto t =
      detail::tally_protocol(n, seed, stream, workers, detail::circle_round(proto, a, b, omega));
  const double nn = static_cast<double>(n);
  return MarginalEstimate{static_cast<double>(t.alpha) / nn, static_cast<double>(t.beta) / nn, n,
                          seed};
}

// Coplanar sphere setting: angle t from the z-axis, in the xz-plane. The
// sphere correlation depends only on the angle between the settings, so one
// great circle hosts every scan.
inline UnitVec3 coplanar_setting(double t) {
  return UnitVec3(std::sin(t), 0.0, std::cos(t));
}

struct ScanRow {
  double theta = 0.0;
  double empirical = 0.0;
  double analytic = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

// One Monte Carlo estimate per grid angle against the analytic curve
// (-cos(theta) for the sphere protocols, the Svozil five-branch formula for
// the circle ones). Row j draws from substream j of the seed.
inline std::vector<ScanRow> scan_curve(Protocol proto, double omega,
                                       std::span<const double> theta_grid, std::uint64_t n,
                                       std::uint64_t seed, unsigned workers = 1) {
  if (theta_grid.empty()) throw std::invalid_argument("scan_curve: empty theta grid");
  std::vector<ScanRow> rows;
  rows.reserve(theta_grid.size());
  for (std::size_t j = 0; j < theta_grid.size(); ++j) {
    const double theta = theta_grid[j];
    if (!(theta >= 0.0 && theta <= kPi)) {
      throw OutOfRange("scan_curve: theta grid must lie in [0, pi]");
    }
    CorrelationEstimate est;
    double analytic = 0.0;
    if (on_circle(proto)) {
      est = estimate_correlation(proto, PlaneAngle(0.0), PlaneAngle(theta), PlaneAngle(omega), n,
                                 seed, workers, j);
      analytic = svozil_E_analytic(theta, omega);
    } else {
      est = estimate_correlation(proto, UnitVec3::z_axis(), coplanar_setting(theta), n, seed,
                                 workers, j);
      analytic = -std::cos(theta);
    }
    rows.push_back(ScanRow{theta, est.mean, analytic, est.std_error, n, seed});
  }
  return rows;
}

struct CHSHReport {
  // a, a', b, b' as coplanar angles; NaN when the report was built from bare
  // correlation values.
  std::array<double, 4> settings{};
  // E(a,b), E(a,b'), E(a',b), E(a',b')
  std::array<double, 4> correlations{};
  // The four standard placements with exactly one minus sign, minus on term i.
  std::array<double, 4> s_values{};
  double s_max = 0.0;
  // The two-absolute-difference form |E(a,b)-E(a,b')| + |E(a',b)-E(a',b')|;
  // reported alongside because it does not reach the algebraic maximum at
  // the standard settings while the four-term form does.
  double two_term = 0.0;
};

inline CHSHReport chsh(double e_ab, double e_abp, double e_apb, double e_apbp) {
  const std::array<double, 4> e{e_ab, e_abp, e_apb, e_apbp};
  for (double v : e) {
    if (!(std::fabs(v) <= 1.0 + 1e-9)) {
      throw std::invalid_argument("chsh: correlations must lie in [-1, 1]");
    }
  }
  CHSHReport r;
  r.settings = {std::nan(""), std::nan(""), std::nan(""), std::nan("")};
  r.correlations = e;
  r.s_values = {-e[0] + e[1] + e[2] + e[3], e[0] - e[1] + e[2] + e[3], e[0] + e[1] - e[2] + e[3],
                e[0] + e[1] + e[2] - e[3]};
  r.s_max = 0.0;
  for (double s : r.s_values) r.s_max = std::max(r.s_max, std::fabs(s));
  r.two_term = std::fabs(e[0] - e[1]) + std::fabs(e[2] - e[3]);
  return r;
}

enum class CurveSource { MonteCarlo, Analytic };

// Exhaustive scan for the largest CHSH score over coplanar settings on a
// uniform circular grid. The requested step is snapped to 2*pi/m so that
// folded setting differences land exactly on the correlation lookup grid.
inline CHSHReport chsh_scan(Protocol proto, double omega, double setting_step, std::uint64_t n,
                            std::uint64_t seed, CurveSource source, unsigned workers = 1) {
  if (!(setting_step > 0.0)) throw std::invalid_argument("chsh_scan: step must be > 0");
  const std::size_t m =
      std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(kTwoPi / setting_step)));
  if (m > 128) throw std::invalid_argument("chsh_scan: step too fine (more than 128 grid settings)");
  const double step = kTwoPi / static_cast<double>(m);

  // E at folded angle d*step, d in [0, m/2].
  std::vector<double> table(m / 2 + 1);
  for (std::size_t d = 0; d < table.size(); ++d) {
    const double theta = std::min(static_cast<double>(d) * step, kPi);
    if (source == CurveSource::Analytic) {
      table[d] = on_circle(proto) ? svozil_E_analytic(theta, omega) : -std::cos(theta);
    } else if (on_circle(proto)) {
      table[d] = estimate_correlation(proto, PlaneAngle(0.0), PlaneAngle(theta), PlaneAngle(omega),
                                      n, seed, workers, d)
                     .mean;
    } else {
      table[d] = estimate_correlation(proto, UnitVec3::z_axis(), coplanar_setting(theta), n, seed,
                                      workers, d)
                     .mean;
    }
  }
  auto fold = [m](std::size_t i, std::size_t j) {
    const std::size_t d = i >= j ? i - j : j - i;
    return std::min(d, m - d);
  };

  double best = -1.0;
  std::array<std::size_t, 4> best_idx{};
  for (std::size_t ka = 0; ka < m; ++ka) {
    for (std::size_t kap = 0; kap < m; ++kap) {
      for (std::size_t kb = 0; kb < m; ++kb) {
        const double e_ab = table[fold(ka, kb)];
        const double e_apb = table[fold(kap, kb)];
        for (std::size_t kbp = 0; kbp < m; ++kbp) {
          const double e_abp = table[fold(ka, kbp)];
          const double e_apbp = table[fold(kap, kbp)];
          const double total = e_ab + e_abp + e_apb + e_apbp;
          double s_max = 0.0;
          s_max = std::max(s_max, std::fabs(total - 2.0 * e_ab));
          s_max = std::max(s_max, std::fabs(total - 2.0 * e_abp));
          s_max = std::max(s_max, std::fabs(total - 2.0 * e_apb));
          s_max = std::max(s_max, std::fabs(total - 2.0 * e_apbp));
          if (s_max > best) {
            best = s_max;
            best_idx = {ka, kap, kb, kbp};
          }
        }
      }
    }
  }

  CHSHReport r = chsh(table[fold(best_idx[0], best_idx[2])], table[fold(best_idx[0], best_idx[3])],
                      table[fold(best_idx[1], best_idx[2])], table[fold(best_idx[1], best_idx[3])]);
  r.settings = {static_cast<double>(best_idx[0]) * step, static_cast<double>(best_idx[1]) * step,
                static_cast<double>(best_idx[2]) * step, static_cast<double>(best_idx[3]) * step};
  return r;
}

}  // namespace srvsim
