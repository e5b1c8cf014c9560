#pragma once

// Limit objects of the maximum degree: Poisson point processes with Gumbel or
// Frechet intensity, the window maximum of w - log v, the Frechet and K-th
// largest laws, the infinite-mean functional Z, and the location laws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "weightdist.hpp"

namespace wrg {

enum class IntensityKind { Gumbel, Frechet };

/// dt x e^-x dx (Gumbel) or dt x (alpha-1) x^-alpha dx (Frechet).
struct Intensity {
  IntensityKind kind = IntensityKind::Gumbel;
  double alpha = kNaN;

  static Intensity gumbel() { return {IntensityKind::Gumbel, kNaN}; }
  static Intensity frechet(double alpha) {
    if (!(alpha > 1.0)) throw DomainError("Frechet intensity needs alpha > 1");
    return {IntensityKind::Frechet, alpha};
  }
};

/// [s, t] x [x_min, inf).
struct Window {
  double s = 0.0;
  double t = 1.0;
  double x_min = 0.0;
};

struct PppPoint {
  double t;
  double x;
};

struct PointSet {
  std::vector<PppPoint> points;
  Window window;
  Intensity intensity;
};

inline double window_measure(const Intensity& in, const Window& w) {
  if (!(w.s < w.t) || !std::isfinite(w.t - w.s)) throw DomainError("window needs s < t, both finite");
  if (in.kind == IntensityKind::Gumbel) {
    if (!std::isfinite(w.x_min)) throw DomainError("Gumbel window needs a finite x_min");
    return (w.t - w.s) * std::exp(-w.x_min);
  }
  if (!(w.x_min > 0.0)) throw DomainError("Frechet window needs x_min > 0");
  return (w.t - w.s) * std::pow(w.x_min, -(in.alpha - 1.0));
}

inline PointSet sample_ppp(const Intensity& in, const Window& w, RandomStream& rng) {
  const double mass = window_measure(in, w);
  if (!std::isfinite(mass)) throw DomainError("window has infinite intensity measure");
  PointSet ps{{}, w, in};
  const std::uint64_t count = rng.poisson(mass);
  ps.points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double t = rng.uniform(w.s, w.t);
    const double x = in.kind == IntensityKind::Gumbel ? w.x_min + rng.exponential()
                                                      : w.x_min * std::pow(rng.uniform(), -1.0 / (in.alpha - 1.0));
    ps.points.push_back({t, x});
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Window maximum of w - log v over Gumbel points with v in [s, t].

inline void check_window(double s, double t) {
  if (!(s > 0.0 && s < t && std::isfinite(t))) throw DomainError("window needs 0 < s < t < inf");
}

/// Location of the window maximum, log log(t/s) - zeta0 (tau+1)^2 / (2 tau).
inline double gumbel_window_location(double s, double t, double tau = 1.0, double zeta0 = 0.0) {
  check_window(s, t);
  if (zeta0 < 0.0) throw DomainError("zeta0 must be >= 0");
  const double shift = zeta0 == 0.0 ? 0.0 : zeta0 * (tau + 1.0) * (tau + 1.0) / (2.0 * tau);
  return std::log(std::log(t / s)) - shift;
}

inline double gumbel_window_max_cdf(double s, double t, double x) {
  check_window(s, t);
  return std::exp(-std::exp(-x) * std::log(t / s));
}

inline double gumbel_window_max_sample(double s, double t, RandomStream& rng) {
  check_window(s, t);
  return std::log(std::log(t / s)) - std::log(-std::log(rng.uniform()));
}

/// The same maximum read off a PPP truncated at marks >= x_min. Marks are
/// generated in decreasing order, (t-s) e^-x_j being the arrivals of a unit
/// Poisson process, and generation stops once no later point can win.
/// Exact on the event max >= x_min - log s; below that the result is
/// -inf or a lower value.
inline double gumbel_window_max_sample_ppp(double s, double t, RandomStream& rng, double x_min = -10.0) {
  check_window(s, t);
  const double log_len = std::log(t - s);
  const double log_s = std::log(s);
  double best = -kInf;
  double arrival = 0.0;
  for (;;) {
    arrival += rng.exponential();
    const double x = log_len - std::log(arrival);
    if (x < x_min || x - log_s <= best) break;
    best = std::max(best, x - std::log(rng.uniform(s, t)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Frechet case, alpha > 2.

inline void check_frechet(double alpha, int m) {
  if (!(alpha > 1.0)) throw DomainError("Frechet laws need alpha > 1");
  if (m < 1) throw DomainError("m must be >= 1");
}

/// P(max <= x) = exp(-Gamma(alpha) (x/m)^-(alpha-1)).
inline double frechet_max_cdf(double alpha, int m, double x) {
  check_frechet(alpha, m);
  if (!(x > 0.0)) throw DomainError("frechet_max_cdf needs x > 0");
  return std::exp(-std::tgamma(alpha) * std::pow(x / m, -(alpha - 1.0)));
}

inline double frechet_max_quantile(double alpha, int m, double u) {
  check_frechet(alpha, m);
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  return m * std::pow(std::tgamma(alpha) / -std::log(u), 1.0 / (alpha - 1.0));
}

/// P(K-th largest <= x) = sum_{i<K} lambda^i e^-lambda / i!, lambda = Gamma(alpha)(x/m)^-(alpha-1).
inline double kth_largest_cdf(double alpha, int m, int K, double x) {
  check_frechet(alpha, m);
  if (K < 1) throw DomainError("K must be >= 1");
  if (!(x > 0.0)) throw DomainError("kth_largest_cdf needs x > 0");
  const double lambda = std::tgamma(alpha) * std::pow(x / m, -(alpha - 1.0));
  // regularized upper incomplete gamma Q(K, lambda) is the Poisson sum
  return boost::math::gamma_q(static_cast<double>(K), lambda);
}

// ---------------------------------------------------------------------------
// Infinite-mean case, alpha in (1,2).

struct ZValue {
  double z = 0.0;
  double t_argmax = kNaN;  // birth time of the maximizing point
};

/// m max_k g_k int_{t_k}^1 ds / C(s), where C(s) = drift s + sum of g over
/// points with u <= s; between sorted birth times C is linear in s.
inline ZValue z_functional_detail(std::span<const PppPoint> pts, int m, double drift = 0.0) {
  if (m < 1) throw DomainError("m must be >= 1");
  if (pts.empty()) throw DomainError("z_functional needs at least one point");
  if (!(drift >= 0.0)) throw DomainError("drift must be >= 0");
  std::vector<PppPoint> p(pts.begin(), pts.end());
  for (const auto& q : p) {
    if (!(q.t >= 0.0 && q.t <= 1.0) || !(q.x > 0.0)) throw DomainError("z_functional needs points in [0,1] x (0,inf)");
  }
  std::sort(p.begin(), p.end(), [](const PppPoint& a, const PppPoint& b) { return a.t < b.t; });
  const std::size_t n = p.size();
  std::vector<double> cum(n);
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) cum[i] = c += p[i].x;
  ZValue best;
  double J = 0.0;  // int_{t_k}^1 ds / C(s)
  for (std::size_t k = n; k-- > 0;) {
    const double next = k + 1 < n ? p[k + 1].t : 1.0;
    const double len = next - p[k].t;
    J += drift > 0.0 ? std::log1p(drift * len / (cum[k] + drift * p[k].t)) / drift : len / cum[k];
    const double v = p[k].x * J;
    if (v >= best.z) {
      best.z = v;
      best.t_argmax = p[k].t;
    }
  }
  best.z *= m;
  return best;
}

inline double z_functional(std::span<const PppPoint> pts, int m) { return z_functional_detail(pts, m).z; }

inline double z_functional(const PointSet& ps, int m) { return z_functional(ps.points, m); }

/// Expected mark mass per unit time of the points below g_min:
/// int_0^g_min g (alpha-1) g^-alpha dg.
inline double small_mark_drift(double alpha, double g_min) {
  return (alpha - 1.0) / (2.0 - alpha) * std::pow(g_min, 2.0 - alpha);
}

enum class Truncation { Compensated, Plain };

/// Z evaluated on a Frechet PPP truncated at marks >= g_min; an empty draw is
/// resampled. Plain truncation drops the small marks from C(s), which biases
/// Z upwards (C only shrinks). Compensated truncation replaces them by their
/// mean mass, drift s with drift = small_mark_drift(alpha, g_min); their
/// fluctuation has variance O(g_min^(3-alpha)).
inline ZValue z_sampler(double alpha, int m, double g_min, RandomStream& rng,
                        Truncation mode = Truncation::Compensated) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("z_sampler needs alpha in (1,2)");
  if (!(g_min > 0.0)) throw DomainError("z_sampler needs g_min > 0");
  const Intensity in = Intensity::frechet(alpha);
  const Window w{0.0, 1.0, g_min};
  const double drift = mode == Truncation::Compensated ? small_mark_drift(alpha, g_min) : 0.0;
  for (;;) {
    PointSet ps = sample_ppp(in, w, rng);
    if (!ps.points.empty()) return z_functional_detail(ps.points, m, drift);
  }
}

// ---------------------------------------------------------------------------
// Location laws.

inline void check_alpha_location(double alpha) {
  if (!(alpha > 1.0)) throw DomainError("I_alpha needs alpha > 1");
}

/// e^-G with G ~ Gamma(alpha, 1).
inline double location_I_alpha_sample(double alpha, RandomStream& rng) {
  check_alpha_location(alpha);
  return std::exp(-rng.gamma(alpha));
}

/// P(I_alpha <= x) = P(G >= log(1/x)) = Q(alpha, log(1/x)).
inline double location_I_alpha_cdf(double alpha, double x) {
  check_alpha_location(alpha);
  if (!(x > 0.0 && x < 1.0)) throw DomainError("location_I_alpha_cdf needs x in (0,1)");
  return boost::math::gamma_q(alpha, -std::log(x));
}

/// g(0, x) / g(0, 1) with g(a, b) = int_a^b log(1/y)^(alpha-1) dy, by quadrature.
inline double location_I_alpha_cdf_quadrature(double alpha, double x) {
  check_alpha_location(alpha);
  if (!(x > 0.0 && x < 1.0)) throw DomainError("location_I_alpha_cdf_quadrature needs x in (0,1)");
  auto f = [alpha](double y) { return y <= 0.0 ? 0.0 : std::pow(-std::log(y), alpha - 1.0); };
  const numerics::QuadratureOptions opt{1e-12, 1e-15, 4000};
  return numerics::integrate(f, 0.0, x, opt) / numerics::integrate(f, 0.0, 1.0, opt);
}

inline double location_I_alpha_mean(double alpha) {
  check_alpha_location(alpha);
  return std::pow(2.0, -alpha);
}

/// e^U with U uniform on (log s, log t).
inline double location_window_sample(double s, double t, RandomStream& rng) {
  check_window(s, t);
  return std::exp(rng.uniform(std::log(s), std::log(t)));
}

inline double location_window_cdf(double s, double t, double x) {
  check_window(s, t);
  if (x <= s) return 0.0;
  if (x >= t) return 1.0;
  return std::log(x / s) / std::log(t / s);
}

}  // namespace wrg
