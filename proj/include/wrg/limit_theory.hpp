#pragma once

// Limiting degree distribution p(k), the measures Gamma^(k), the asymptotic
// forms of p(k) per weight class and first/second-order predictions for the
// maximum degree and its location.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "numerics.hpp"
#include "weightdist.hpp"

namespace wrg {

struct DegreeLawQuery {
  WeightFamily family;
  int m = 1;
  std::uint64_t k = 0;
};

inline double gamma_exponent(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("gamma_exponent needs tau in (0, inf)");
  return 1.0 / (tau + 1.0);
}

/// theta_m = 1 + E[W]/m with the weights measured in units of their essential
/// supremum. Unbounded laws use the produced weights as they are.
inline double theta_m(const WeightFamily& f, int m) {
  if (m < 1) throw DomainError("m must be >= 1");
  const WeightLaw law(f);
  const double mu = law.mean();
  if (!std::isfinite(mu)) throw DomainError("theta_m needs a finite mean");
  const double sup = law.sup();
  return 1.0 + (std::isfinite(sup) ? mu / sup : mu) / m;
}

namespace detail {

inline double mean_over_m(const WeightLaw& law, int m) {
  if (m < 1) throw DomainError("m must be >= 1");
  const double mu = law.mean();
  if (!std::isfinite(mu)) throw DomainError("p(k) requires a finite mean");
  return mu / m;
}

/// (mb/(mb+x)) (x/(mb+x))^k evaluated through log1p so large k does not
/// underflow prematurely.
inline double pk_integrand(double mb, std::uint64_t k, double x) {
  const double r = mb / (mb + x);
  if (k == 0) return r;
  if (x <= 0.0) return 0.0;
  return r * std::exp(static_cast<double>(k) * std::log1p(-r));
}

// exp(k log(...)) carries a relative rounding error of order k eps, which sets
// the floor for the achievable relative tolerance.
inline numerics::QuadratureOptions pk_options(std::uint64_t k) {
  const double floor = 64.0 * (static_cast<double>(k) + 1.0) * std::numeric_limits<double>::epsilon();
  return {std::max(1e-11, floor), 1e-300, 4000};
}

}  // namespace detail

/// Gamma^(k)((lo, hi]) for the produced weights; zero on an empty interval.
inline double gamma_k_mass(const DegreeLawQuery& q, double lo, double hi) {
  const WeightLaw law(q.family);
  const double mb = detail::mean_over_m(law, q.m);
  if (!(lo < hi)) return 0.0;
  std::vector<double> bp;
  if (q.k > 0) bp.push_back(mb * static_cast<double>(q.k));
  const std::uint64_t k = q.k;
  return law.expect([&](double x) { return detail::pk_integrand(mb, k, x); }, lo, hi, bp, detail::pk_options(k));
}

/// p(k) = Gamma^(k)((0, inf)).
inline double pk_limit(const DegreeLawQuery& q) { return gamma_k_mass(q, -kInf, kInf); }

/// Gamma((lo, hi]) where Gamma(dx) = x m/E[W] mu(dx); equals sum_k k Gamma^(k).
inline double gamma_mass(const WeightFamily& f, int m, double lo, double hi) {
  const WeightLaw law(f);
  const double mb = detail::mean_over_m(law, m);
  if (!(lo < hi)) return 0.0;
  return law.expect([](double x) { return x; }, lo, hi) / mb;
}

/// Exact p(k) for Pareto weights with k > alpha - 1:
/// (alpha-1) r^(alpha-1) B(k-alpha+1, alpha) I_{1/(1+r)}(alpha, k-alpha+1), r = x_min/mb.
inline double pk_pareto_closed_form(double alpha, double x_min_over_mb, std::uint64_t k) {
  const double kk = static_cast<double>(k);
  if (!(alpha > 2.0)) throw DomainError("closed form needs alpha > 2");
  if (!(kk > alpha - 1.0)) throw DomainError("closed form needs k > alpha - 1");
  const double r = x_min_over_mb;
  const double a = kk - alpha + 1.0;
  const double log_pref = std::log(alpha - 1.0) + (alpha - 1.0) * std::log(r) + std::lgamma(a) + std::lgamma(alpha) -
                          std::lgamma(kk + 1.0);
  return std::exp(log_pref) * boost::math::ibeta(alpha, a, 1.0 / (1.0 + r));
}

enum class PkForm { BoundedWeibull, BoundedGumbelRV, BoundedGumbelRaV, Atom, GumbelRV, GumbelRaV, Frechet };

inline const char* to_string(PkForm f) {
  switch (f) {
    case PkForm::BoundedWeibull: return "bounded_weibull";
    case PkForm::BoundedGumbelRV: return "bounded_gumbel_rv";
    case PkForm::BoundedGumbelRaV: return "bounded_gumbel_rav";
    case PkForm::Atom: return "atom";
    case PkForm::GumbelRV: return "gumbel_rv";
    case PkForm::GumbelRaV: return "gumbel_rav";
    case PkForm::Frechet: return "frechet";
  }
  return "unknown";
}

struct PkAsymptotic {
  double lower = kNaN;
  double upper = kNaN;
  PkForm form = PkForm::Atom;
  bool point = true;   // lower == upper, a leading-order value
  bool sharp = true;   // false when the envelope is known to be loose
  std::string note;
};

namespace detail {

// The K terms of the rapidly varying expansions.
inline double rav_pk_exponent(double tau, double c1, double K, double L) {
  return -std::pow(L / c1, tau) * (1.0 - tau * (tau - 1.0) * std::log(L) / L + K / L);
}

}  // namespace detail

/// Leading-order form of p(k) for the class of the family. Exact forms are
/// returned as a point, slowly varying envelopes as an interval.
inline PkAsymptotic pk_asymptotic(const DegreeLawQuery& q) {
  const WeightLaw law(q.family);
  const double mb = detail::mean_over_m(law, q.m);
  const Classification c = classify(q.family);
  const double k = static_cast<double>(q.k);
  if (!(k >= 1.0)) throw DomainError("pk_asymptotic needs k >= 1");
  PkAsymptotic out;
  auto set_point = [&](PkForm f, double v) {
    out.form = f;
    out.lower = out.upper = v;
  };

  if (is_bounded(c.cls)) {
    const double sup = law.sup();
    const double th = theta_m(q.family, q.m);
    const double eta = 1.0 - 1.0 / th;
    if (!(k > q.m * sup / law.mean())) throw DomainError("bounded asymptotics need k > m/E[W]");
    const double log_geo = -k * std::log(th);
    const auto& refl = c.cls == WeightClass::BoundedAtom ? nullptr : &std::get<Reflected>(q.family.law);
    switch (c.cls) {
      case WeightClass::BoundedAtom:
        set_point(PkForm::Atom, c.q0 * eta * std::exp(log_geo));
        return out;
      case WeightClass::BoundedWeibull: {
        const auto& p = std::get<FrechetPareto>(refl->inner);
        const double alpha = c.alpha;
        const double edge = refl->x0 * p.x_min;
        // l(x) = P((1 - W/x0)^-1 >= x) x^(alpha-1)
        auto ell = [&](double x) { return x >= edge ? std::pow(edge, alpha - 1.0) : std::pow(x, alpha - 1.0); };
        const double tk = eta * k / ((alpha - 1.0) * std::log(k));
        const double L_up = 1.0 + std::pow(eta, 2.0 - alpha) * std::pow(alpha - 1.0, alpha - 1.0) *
                                      std::pow(std::log(k), alpha - 1.0) * ell(tk);
        const double L_lo = eta * std::exp(-eta) * ell(k);
        const double base = std::exp(-(alpha - 1.0) * std::log(k) + log_geo);
        out.form = PkForm::BoundedWeibull;
        out.point = false;
        out.sharp = false;
        out.lower = L_lo * base;
        out.upper = L_up * base;
        out.note = "slowly varying envelope; lower bound holds up to a factor 1+o(1)";
        return out;
      }
      case WeightClass::BoundedGumbel: {
        const double tau = c.tau;
        if (!c.rapid_inner) {
          const double g = gamma_exponent(tau);
          const double c1 = refl->x0 * c.c1;
          const double e = -(std::pow(tau, g) / (1.0 - g)) * std::pow(eta * k / c1, 1.0 - g);
          set_point(PkForm::BoundedGumbelRV, std::exp(e + log_geo));
        } else {
          if (refl->x0 != 1.0) throw DomainError("the rapidly varying bounded form is stated for x0 = 1");
          if (!(k > std::exp(1.0))) throw DomainError("rapidly varying form needs k > e");
          const double K = tau * std::log(std::exp(1.0) * std::pow(c.c1, tau) * eta / tau);
          set_point(PkForm::BoundedGumbelRaV, std::exp(detail::rav_pk_exponent(tau, c.c1, K, std::log(k)) + log_geo));
        }
        out.note = "leading order; the exponent carries a factor 1+o(1)";
        return out;
      }
      default: break;
    }
  }

  // Unbounded classes are stated for unit-mean weights; kmb = k E[W]/m is the
  // scale-free argument.
  const double kmb = k * mb;
  switch (c.cls) {
    case WeightClass::GumbelRV: {
      const double g = gamma_exponent(c.tau);
      const double c1 = c.c1 / law.scale();
      set_point(PkForm::GumbelRV, std::exp(-(std::pow(c.tau, g) / (1.0 - g)) * std::pow(kmb / c1, 1.0 - g)));
      out.note = "leading order; the exponent carries a factor 1+o(1)";
      return out;
    }
    case WeightClass::GumbelRaV: {
      const double L = std::log(k * law.raw_mean() / q.m);
      if (!(L > 1.0)) throw DomainError("rapidly varying form needs log(k E[W]/m) > 1");
      const double K = c.tau * std::log(std::exp(1.0) * std::pow(c.c1, c.tau) / c.tau);
      set_point(PkForm::GumbelRaV, std::exp(detail::rav_pk_exponent(c.tau, c.c1, K, L)) / k);
      out.note = "leading order; the exponent carries a factor 1+o(1)";
      return out;
    }
    case WeightClass::Frechet: {
      const auto& p = std::get<FrechetPareto>(q.family.law);
      const double alpha = c.alpha;
      if (!(k > 1.0)) throw DomainError("power-law envelope needs k >= 2");
      const double x_min = p.x_min / law.scale();
      const double mu = law.mean();
      // tail constant of the unit-mean law: P(W/E W >= x) = l x^-(alpha-1)
      const double ell = std::pow(x_min / mu, alpha - 1.0);
      out.form = PkForm::Frechet;
      out.point = false;
      out.sharp = false;
      out.lower = (alpha - 1.0) * std::tgamma(alpha) * std::pow(x_min / mb, alpha - 1.0) * std::pow(k, -alpha);
      out.upper = std::pow(q.m * (alpha - 1.0) * std::log(k), alpha) * ell * std::pow(k, -alpha);
      out.note = "lower is the leading term k^-alpha; upper is a log-power envelope";
      return out;
    }
    case WeightClass::GumbelSV: throw DomainError("no p(k) asymptotic form for slowly varying weights");
    default: break;
  }
  throw DomainError("unclassifiable family for pk_asymptotic");
}

struct MaxDegreePrediction {
  double first_order = kNaN;
  std::optional<double> second_order_addend;
  WeightClass regime = WeightClass::BoundedAtom;
  bool scale_is_random = false;
  std::string limit;  // what max Z_n / first_order converges to
};

/// Coefficient of the rapidly varying second-order term:
/// (1/2)(1 - 1/tau) for tau in (1, 3], -tau (tau-1)^2 / (2 c1^3) for tau > 3.
inline double rav_second_order_coefficient(double tau, double c1) {
  if (!(tau > 1.0)) throw DomainError("rapidly varying laws have tau > 1");
  if (tau <= 3.0) return 0.5 * (1.0 - 1.0 / tau);
  return -tau * (tau - 1.0) * (tau - 1.0) / (2.0 * c1 * c1 * c1);
}

inline MaxDegreePrediction max_degree_prediction(const WeightFamily& f, int m, double n) {
  if (!(n >= 3.0)) throw DomainError("max_degree_prediction needs n >= 3");
  if (m < 1) throw DomainError("m must be >= 1");
  const Classification c = classify(f);
  const double L = std::log(n);
  MaxDegreePrediction p;
  p.regime = c.cls;
  if (is_bounded(c.cls)) {
    p.first_order = L / std::log(theta_m(f, m));
    p.limit = "max/first_order -> 1 a.s.";
    return p;
  }
  switch (c.cls) {
    case WeightClass::GumbelSV: {
      const auto s = unit_mean_seqs(f, n, m);
      p.first_order = m * *s.b_n * L;
      p.limit = "max/first_order -> 1 a.s.";
      return p;
    }
    case WeightClass::GumbelRV: {
      const double g = gamma_exponent(c.tau);
      const auto s = unit_mean_seqs(f, std::pow(n, g), m);
      p.first_order = m * (1.0 - g) * *s.b_n * L;
      if (c.tau <= 1.0) p.second_order_addend = 0.5 * m * (1.0 - g) * *s.a_n * L * std::log(L);
      p.limit = "max/first_order -> 1 a.s.";
      return p;
    }
    case WeightClass::GumbelRaV: {
      const double tn = *unit_mean_seqs(f, n, m).t_n;
      const auto s = unit_mean_seqs(f, tn * n, m);
      const double lt = -std::log(tn);
      p.first_order = m * *s.b_n * lt;
      const double coef = rav_second_order_coefficient(c.tau, c.c1);
      const double rest = c.tau <= 3.0 ? std::log(L) : std::pow(L, 1.0 - 3.0 / c.tau);
      p.second_order_addend = coef * m * *s.a_n * lt * rest;
      p.limit = "max/first_order -> 1 in probability";
      return p;
    }
    case WeightClass::Frechet: {
      p.scale_is_random = true;
      if (c.alpha > 2.0) {
        p.first_order = *unit_mean_seqs(f, n, m).u_n;
        p.limit = "Frechet(shape alpha-1, scale m Gamma(alpha)^(1/(alpha-1)))";
      } else if (c.alpha < 2.0) {
        p.first_order = n;
        p.limit = "Z functional of a Poisson point process";
      } else {
        throw DomainError("alpha = 2 has no maximum-degree prediction");
      }
      return p;
    }
    default: break;
  }
  throw DomainError("unclassifiable family for max_degree_prediction");
}

struct LocationPrediction {
  double exponent = kNaN;  // limit of log I_n / log n
  bool linear_in_n = false;
  std::string law;         // law of I_n / n when linear_in_n
  bool conjecture = false;
  std::string tag;
};

inline LocationPrediction location_prediction(const WeightFamily& f, int m = 1) {
  const Classification c = classify(f);
  LocationPrediction out;
  if (is_bounded(c.cls)) {
    const double th = theta_m(f, m);
    out.exponent = 1.0 - (th - 1.0) / (th * std::log(th));
    out.conjecture = true;
    out.tag = "CONJECTURE";
    return out;
  }
  switch (c.cls) {
    case WeightClass::GumbelSV: out.exponent = 0.0; break;
    case WeightClass::GumbelRV: out.exponent = gamma_exponent(c.tau); break;
    case WeightClass::GumbelRaV: out.exponent = 1.0; break;
    case WeightClass::Frechet:
      if (c.alpha == 2.0) throw DomainError("alpha = 2 has no location prediction");
      out.exponent = 1.0;
      out.linear_in_n = true;
      out.law = c.alpha > 2.0 ? "I_alpha = exp(-Gamma(alpha,1))" : "I (unspecified law on (0,1))";
      break;
    default: throw DomainError("unclassifiable family for location_prediction");
  }
  out.tag = "THEOREM";
  return out;
}

/// Infinite-mean Pareto weights: a uniform vertex has in-degree zero with
/// probability at least 1 - C n^-(e - eps), e = min(2-alpha, alpha-1)/alpha.
inline double zero_degree_exponent(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("zero_degree_exponent needs alpha in (1,2)");
  return std::min(2.0 - alpha, alpha - 1.0) / alpha;
}

}  // namespace wrg
