#pragma once

// Vertex-weight laws: sampling by survival inversion, survival functions,
// means, expectations by quadrature, class labels and extreme-value
// normalizing sequences.
//
// Every continuous law is represented as a monotone map of a base variable V
// whose survival function is either a parametric tail
//     P(V >= v) = a v^b exp(-(v/c1)^tau)   (v above a support edge)
// or a Pareto tail (v/x_min)^-(alpha-1). Quadrature runs in s = log V, where
// the densities are smooth and the supports are unbounded only on the right.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace wrg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Point mass at c.
struct Constant {
  double c = 1.0;
};

/// Mass q0 at 1, the remaining mass uniform on [0, s] with s <= 1.
struct Atom {
  double q0 = 1.0;
  double s = 0.5;
};

/// P(W >= x) = a x^b exp(-(x/c1)^tau) above the support edge.
struct GumbelRV {
  double tau = 1.0;
  double c1 = 1.0;
  double a = 1.0;
  double b = 0.0;
};

/// P(W >= x) = a (log x)^b exp(-(log x/c1)^tau) above the support edge, tau > 1.
struct GumbelRaV {
  double tau = 2.0;
  double c1 = 1.0;
  double a = 1.0;
  double b = 0.0;
};

/// P(W >= x) = (x/x_min)^-(alpha-1) for x >= x_min.
struct FrechetPareto {
  double alpha = 3.0;
  double x_min = 1.0;
};

/// W = log(1 + W') with W' drawn from an RV law.
struct GumbelSV {
  GumbelRV inner;
};

/// W = x0 - 1/X, bounded above by x0.
struct Reflected {
  std::variant<FrechetPareto, GumbelRV, GumbelRaV> inner;
  double x0 = 1.0;
};

using WeightLawSpec = std::variant<Constant, Atom, GumbelRV, GumbelRaV, FrechetPareto, GumbelSV, Reflected>;

struct WeightFamily {
  WeightLawSpec law = Constant{};
  bool normalize_mean = false;

  static WeightFamily constant(double c = 1.0) { return {Constant{c}, false}; }
  static WeightFamily atom(double q0, double s) { return {Atom{q0, s}, false}; }
  static WeightFamily gumbel_rv(double tau, double c1, double a = 1.0, double b = 0.0, bool norm = false) {
    return {GumbelRV{tau, c1, a, b}, norm};
  }
  static WeightFamily gumbel_rav(double tau, double c1, double a = 1.0, double b = 0.0, bool norm = false) {
    return {GumbelRaV{tau, c1, a, b}, norm};
  }
  static WeightFamily gumbel_sv(double tau, double c1, double a = 1.0, double b = 0.0, bool norm = false) {
    return {GumbelSV{GumbelRV{tau, c1, a, b}}, norm};
  }
  static WeightFamily frechet_pareto(double alpha, double x_min, bool norm = false) {
    return {FrechetPareto{alpha, x_min}, norm};
  }
  /// Pareto with scale chosen so that the mean is one (alpha > 2).
  static WeightFamily frechet_unit_mean(double alpha) {
    return {FrechetPareto{alpha, (alpha - 2.0) / (alpha - 1.0)}, true};
  }
  /// 1 - 1/X with X Pareto of tail index alpha-1 and scale 1.
  static WeightFamily bounded_weibull(double alpha, bool norm = false) {
    return {Reflected{FrechetPareto{alpha, 1.0}, 1.0}, norm};
  }
  /// 1 - 1/X with X a Weibull(tau, c1) variable conditioned on X >= 1.
  static WeightFamily bounded_gumbel_rv(double tau, double c1, bool norm = false) {
    return {Reflected{GumbelRV{tau, c1, std::exp(std::pow(c1, -tau)), 0.0}, 1.0}, norm};
  }
  /// 1 - 1/X with X = exp(Y), Y Weibull(tau, c1), tau > 1.
  static WeightFamily bounded_gumbel_rav(double tau, double c1, bool norm = false) {
    return {Reflected{GumbelRaV{tau, c1, 1.0, 0.0}, 1.0}, norm};
  }
};

enum class WeightClass { BoundedWeibull, BoundedGumbel, BoundedAtom, GumbelSV, GumbelRV, GumbelRaV, Frechet };

inline const char* to_string(WeightClass c) {
  switch (c) {
    case WeightClass::BoundedWeibull: return "bounded_weibull";
    case WeightClass::BoundedGumbel: return "bounded_gumbel";
    case WeightClass::BoundedAtom: return "bounded_atom";
    case WeightClass::GumbelSV: return "gumbel_sv";
    case WeightClass::GumbelRV: return "gumbel_rv";
    case WeightClass::GumbelRaV: return "gumbel_rav";
    case WeightClass::Frechet: return "frechet";
  }
  return "unknown";
}

inline bool is_bounded(WeightClass c) {
  return c == WeightClass::BoundedWeibull || c == WeightClass::BoundedGumbel || c == WeightClass::BoundedAtom;
}

struct Classification {
  WeightClass cls;
  double alpha = kNaN;  // Frechet and BoundedWeibull
  double q0 = kNaN;     // BoundedAtom
  double tau = kNaN;    // Gumbel classes and BoundedGumbel (tau of the inner tail)
  double c1 = kNaN;
  bool rapid_inner = false;  // BoundedGumbel built from a rapidly varying tail
};

inline Classification classify(const WeightFamily& f) {
  struct Visitor {
    Classification operator()(const Constant&) const { return {WeightClass::BoundedAtom, kNaN, 1.0}; }
    Classification operator()(const Atom& a) const { return {WeightClass::BoundedAtom, kNaN, a.q0}; }
    Classification operator()(const GumbelRV& g) const {
      return {WeightClass::GumbelRV, kNaN, kNaN, g.tau, g.c1};
    }
    Classification operator()(const GumbelRaV& g) const {
      return {WeightClass::GumbelRaV, kNaN, kNaN, g.tau, g.c1};
    }
    Classification operator()(const FrechetPareto& p) const { return {WeightClass::Frechet, p.alpha}; }
    Classification operator()(const GumbelSV& g) const {
      return {WeightClass::GumbelSV, kNaN, kNaN, g.inner.tau, g.inner.c1};
    }
    Classification operator()(const Reflected& r) const {
      if (auto* p = std::get_if<FrechetPareto>(&r.inner)) return {WeightClass::BoundedWeibull, p->alpha};
      if (auto* g = std::get_if<GumbelRV>(&r.inner)) {
        return {WeightClass::BoundedGumbel, kNaN, kNaN, g->tau, g->c1};
      }
      const auto& g = std::get<GumbelRaV>(r.inner);
      return {WeightClass::BoundedGumbel, kNaN, kNaN, g.tau, g.c1, true};
    }
  };
  return std::visit(Visitor{}, f.law);
}

namespace detail {

inline void check_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError(std::string(name) + " must be positive and finite");
}

/// Survival a v^b exp(-(v/c1)^tau) on (edge, inf), equal to 1 at and below the
/// edge. When the peak of the parametric form lies below 1 the law carries an
/// atom at the peak.
class ParametricTail {
 public:
  ParametricTail() = default;
  ParametricTail(double tau, double c1, double a, double b) : tau_(tau), c1_(c1), a_(a), b_(b) {
    check_positive(tau, "tau");
    check_positive(c1, "c1");
    check_positive(a, "a");
    if (!std::isfinite(b)) throw DomainError("b must be finite");
    log_a_ = std::log(a);
    if (b == 0.0) {
      if (a < 1.0) throw DomainError("a < 1 with b = 0 puts an atom at zero");
      edge_ = a == 1.0 ? 0.0 : c1 * std::pow(log_a_, 1.0 / tau);
    } else if (b < 0.0) {
      // log g decreases from +inf to -inf.
      edge_ = std::exp(solve_log_level(-kInf, 0.0));
    } else {
      const double peak = c1 * std::pow(b / tau, 1.0 / tau);
      const double lg = log_g(peak);
      if (lg <= 0.0) {
        edge_ = peak;
        atom_ = -std::expm1(lg);
      } else {
        edge_ = std::exp(solve_log_level(std::log(peak), 0.0));
      }
    }
    s_edge_ = edge_ > 0.0 ? std::log(edge_) : -kInf;
  }

  double tau() const { return tau_; }
  double c1() const { return c1_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double edge() const { return edge_; }
  double s_edge() const { return s_edge_; }
  double atom() const { return atom_; }

  double log_g(double v) const {
    return log_a_ + (b_ == 0.0 ? 0.0 : b_ * std::log(v)) - std::pow(v / c1_, tau_);
  }

  double survival(double v) const {
    if (!(v > edge_)) return 1.0;
    return std::clamp(std::exp(log_g(v)), 0.0, 1.0);
  }

  /// v with survival(v) = u for u in (0,1).
  double quantile(double u) const {
    if (u > 1.0 - atom_) return edge_;
    if (b_ == 0.0) {
      if (a_ == 1.0) return c1_ * std::pow(-std::log(u), 1.0 / tau_);
      return c1_ * std::pow(log_a_ - std::log(u), 1.0 / tau_);
    }
    return std::exp(solve_log_level(s_edge_, std::log(u)));
  }

  /// Log density of s = log V on (s_edge, inf).
  double log_density_s(double s) const {
    const double z = std::exp(tau_ * (s - std::log(c1_)));
    const double slope = tau_ * z - b_;
    if (!(slope > 0.0)) return -kInf;
    return log_a_ + b_ * s - z + std::log(slope);
  }

  /// s at which (e^s/c1)^tau = z.
  double s_at_z(double z) const { return std::log(c1_) + std::log(z) / tau_; }

  std::vector<double> s_breakpoints() const {
    std::vector<double> bp;
    const double zpeak = std::max(1.0 + b_ / tau_, 1e-3);
    for (double z : {zpeak * 1e-3, zpeak, 8.0 * zpeak, 50.0 + zpeak, 720.0 + zpeak}) {
      const double s = s_at_z(z);
      if (s > s_edge_) bp.push_back(s);
    }
    std::sort(bp.begin(), bp.end());
    return bp;
  }

 private:
  // Root s >= lo of log_g(e^s) = level, where log_g(e^s) is decreasing on [lo, inf).
  double solve_log_level(double lo, double level) const {
    auto f = [&](double s) { return level - log_g(std::exp(s)); };
    double hi = std::isfinite(lo) ? std::max(lo + 1.0, s_at_z(1.0)) : s_at_z(1.0);
    for (int i = 0; i < 200 && f(hi) < 0.0; ++i) hi += 1.0 + std::abs(hi);
    if (!std::isfinite(lo)) {
      lo = hi - 1.0;
      for (int i = 0; i < 200 && f(lo) > 0.0; ++i) lo -= 1.0 + std::abs(lo);
    }
    return numerics::solve_increasing(f, lo, hi, 1e-14);
  }

  double tau_ = 1.0, c1_ = 1.0, a_ = 1.0, b_ = 0.0, log_a_ = 0.0;
  double edge_ = 0.0, s_edge_ = -kInf, atom_ = 0.0;
};

/// Pareto tail (v/x_min)^-(alpha-1) on [x_min, inf).
class ParetoTail {
 public:
  ParetoTail() = default;
  ParetoTail(double alpha, double x_min) : alpha_(alpha), x_min_(x_min) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw DomainError("Pareto requires alpha > 1");
    check_positive(x_min, "x_min");
  }
  double alpha() const { return alpha_; }
  double x_min() const { return x_min_; }
  double edge() const { return x_min_; }
  double s_edge() const { return std::log(x_min_); }
  double atom() const { return 0.0; }
  double survival(double v) const {
    if (!(v > x_min_)) return 1.0;
    return std::min(1.0, std::pow(v / x_min_, -(alpha_ - 1.0)));
  }
  double quantile(double u) const { return x_min_ * std::pow(u, -1.0 / (alpha_ - 1.0)); }
  double log_density_s(double s) const {
    return std::log(alpha_ - 1.0) - (alpha_ - 1.0) * (s - std::log(x_min_));
  }
  std::vector<double> s_breakpoints() const {
    const double k = alpha_ - 1.0;
    return {s_edge() + 0.1 / k, s_edge() + 1.0 / k, s_edge() + 8.0 / k, s_edge() + 60.0 / k,
            s_edge() + 720.0 / k};
  }

 private:
  double alpha_ = 3.0, x_min_ = 1.0;
};

/// How the raw weight is obtained from the base variable V.
enum class MapKind { Identity, Exp, Log1p, ReflectIdentity, ReflectExp };

}  // namespace detail

/// Prepared weight law. Construction validates parameters and caches the mean;
/// evaluation is then cheap and thread-safe.
class WeightLaw {
 public:
  explicit WeightLaw(const WeightFamily& family) : family_(family) {
    std::visit([this](const auto& law) { init(law); }, family.law);
    raw_mean_ = compute_raw_mean();
    scale_ = (family.normalize_mean && std::isfinite(raw_mean_)) ? raw_mean_ : 1.0;
  }

  const WeightFamily& family() const { return family_; }

  /// Mean of the untransformed law; +inf when infinite.
  double raw_mean() const { return raw_mean_; }
  /// Divisor applied to raw draws (the raw mean when normalizing, else 1).
  double scale() const { return scale_; }
  double mean() const { return std::isfinite(raw_mean_) ? raw_mean_ / scale_ : kInf; }

  /// Essential supremum of the produced weights (inf for unbounded laws).
  double sup() const {
    switch (kind_) {
      case Kind::Constant: return c_ / scale_;
      case Kind::Atom: return (q0_ > 0.0 ? 1.0 : s_) / scale_;
      case Kind::Continuous:
        return (map_ == detail::MapKind::ReflectIdentity || map_ == detail::MapKind::ReflectExp) ? x0_ / scale_
                                                                                                : kInf;
    }
    return kInf;
  }

  /// The weight x with P(W >= x) = u, for u in (0,1).
  double quantile(double u) const { return raw_quantile(u) / scale_; }

  double sample(RandomStream& rng) const { return quantile(rng.uniform()); }

  /// Raw (unnormalized) draw fed by a single uniform.
  double raw_quantile(double u) const {
    switch (kind_) {
      case Kind::Constant: return c_;
      case Kind::Atom: return u <= q0_ ? 1.0 : s_ * (1.0 - u) / (1.0 - q0_);
      case Kind::Continuous: return map_v(base_quantile(u));
    }
    return kNaN;
  }

  /// P(W >= x).
  double tail_prob(double x) const {
    const double w = x * scale_;
    switch (kind_) {
      case Kind::Constant: return w <= c_ ? 1.0 : 0.0;
      case Kind::Atom:
        if (w <= 0.0) return 1.0;
        if (w <= s_) return std::clamp(q0_ + (1.0 - q0_) * (s_ - w) / s_, 0.0, 1.0);
        return w <= 1.0 ? q0_ : 0.0;
      case Kind::Continuous: {
        const double v = map_v_inverse(w);
        if (v == kInf) return 0.0;
        return base_survival(v);
      }
    }
    return kNaN;
  }

  /// E[f(W); lo < W <= hi] by quadrature, with additional breakpoints given in
  /// weight units.
  template <class F>
  double expect(F&& f, double lo = -kInf, double hi = kInf, const std::vector<double>& breakpoints = {},
                numerics::QuadratureOptions opt = {}) const {
    if (!(lo < hi)) return 0.0;
    switch (kind_) {
      case Kind::Constant: {
        const double w = c_ / scale_;
        return (lo < w && w <= hi) ? f(w) : 0.0;
      }
      case Kind::Atom: {
        double total = 0.0;
        const double top = 1.0 / scale_;
        if (q0_ > 0.0 && lo < top && top <= hi) total += q0_ * f(top);
        if (q0_ < 1.0) {
          const double s = s_ / scale_;
          const double a = std::max(lo, 0.0), b = std::min(hi, s);
          if (a < b) {
            const double dens = (1.0 - q0_) / s;
            total += numerics::integrate_split([&](double w) { return dens * f(w); }, a, b, breakpoints, opt);
          }
        }
        return total;
      }
      case Kind::Continuous: break;
    }
    double total = 0.0;
    const double atom = base_atom();
    if (atom > 0.0) {
      const double w = map_v(base_edge()) / scale_;
      if (lo < w && w <= hi) total += atom * f(w);
    }
    double s_lo = std::max(base_s_edge(), s_of_w(lo));
    double s_hi = s_of_w(hi);
    if (!(s_lo < s_hi)) return total;
    std::vector<double> bp = base_breakpoints();
    for (double w : breakpoints) bp.push_back(s_of_w(w));
    std::sort(bp.begin(), bp.end());
    auto integrand = [&](double s) {
      const double ld = base_log_density_s(s);
      if (!(ld > -745.0)) return 0.0;
      const double val = f(map_v(std::exp(s)) / scale_);
      return val == 0.0 ? 0.0 : std::exp(ld) * val;
    };
    return total + numerics::integrate_split(integrand, s_lo, s_hi, bp, opt);
  }

  /// Edge of the base tail, exposed for diagnostics.
  double base_edge() const {
    return std::visit([](const auto& t) { return t.edge(); }, tail_);
  }

 private:
  enum class Kind { Constant, Atom, Continuous };

  void init(const Constant& c) {
    detail::check_positive(c.c, "c");
    kind_ = Kind::Constant;
    c_ = c.c;
  }
  void init(const Atom& a) {
    if (!(a.q0 > 0.0 && a.q0 <= 1.0)) throw DomainError("atom mass q0 must lie in (0,1]");
    if (!(a.s > 0.0 && a.s <= 1.0)) throw DomainError("atom base support s must lie in (0,1]");
    kind_ = Kind::Atom;
    q0_ = a.q0;
    s_ = a.s;
  }
  void init(const GumbelRV& g) {
    kind_ = Kind::Continuous;
    tail_ = detail::ParametricTail(g.tau, g.c1, g.a, g.b);
    map_ = detail::MapKind::Identity;
  }
  void init(const GumbelRaV& g) {
    if (!(g.tau > 1.0)) throw DomainError("rapidly varying law requires tau > 1");
    kind_ = Kind::Continuous;
    tail_ = detail::ParametricTail(g.tau, g.c1, g.a, g.b);
    map_ = detail::MapKind::Exp;
  }
  void init(const FrechetPareto& p) {
    kind_ = Kind::Continuous;
    tail_ = detail::ParetoTail(p.alpha, p.x_min);
    map_ = detail::MapKind::Identity;
  }
  void init(const GumbelSV& g) {
    init(g.inner);
    map_ = detail::MapKind::Log1p;
  }
  void init(const Reflected& r) {
    detail::check_positive(r.x0, "x0");
    std::visit([this](const auto& in) { init(in); }, r.inner);
    map_ = map_ == detail::MapKind::Exp ? detail::MapKind::ReflectExp : detail::MapKind::ReflectIdentity;
    x0_ = r.x0;
    const double x_edge = map_ == detail::MapKind::ReflectExp ? std::exp(base_edge()) : base_edge();
    if (!(x_edge * r.x0 >= 1.0 - 1e-12)) {
      throw DomainError("reflection needs the inner support to start at or above 1/x0");
    }
  }

  double base_quantile(double u) const {
    return std::visit([u](const auto& t) { return t.quantile(u); }, tail_);
  }
  double base_survival(double v) const {
    return std::visit([v](const auto& t) { return t.survival(v); }, tail_);
  }
  double base_atom() const {
    return std::visit([](const auto& t) { return t.atom(); }, tail_);
  }
  double base_s_edge() const {
    return std::visit([](const auto& t) { return t.s_edge(); }, tail_);
  }
  double base_log_density_s(double s) const {
    return std::visit([s](const auto& t) { return t.log_density_s(s); }, tail_);
  }
  std::vector<double> base_breakpoints() const {
    return std::visit([](const auto& t) { return t.s_breakpoints(); }, tail_);
  }

  double map_v(double v) const {
    switch (map_) {
      case detail::MapKind::Identity: return v;
      case detail::MapKind::Exp: return std::exp(v);
      case detail::MapKind::Log1p: return std::log1p(v);
      case detail::MapKind::ReflectIdentity: return x0_ - 1.0 / v;
      case detail::MapKind::ReflectExp: return x0_ - 1.0 / std::exp(v);
    }
    return kNaN;
  }

  // Base value v whose image is the raw weight w; -inf/+inf outside the range.
  double map_v_inverse(double w) const {
    switch (map_) {
      case detail::MapKind::Identity: return w;
      case detail::MapKind::Exp: return w > 0.0 ? std::log(w) : -kInf;
      case detail::MapKind::Log1p: return std::expm1(w);
      case detail::MapKind::ReflectIdentity: return w < x0_ ? 1.0 / (x0_ - w) : kInf;
      case detail::MapKind::ReflectExp: return w < x0_ ? -std::log(x0_ - w) : kInf;
    }
    return kNaN;
  }

  // Weight (in produced units) to s = log V.
  double s_of_w(double w) const {
    if (w == kInf) return kInf;
    if (w == -kInf) return -kInf;
    const double v = map_v_inverse(w * scale_);
    if (v == kInf) return kInf;
    if (!(v > 0.0)) return -kInf;
    return std::log(v);
  }

  double compute_raw_mean() const {
    switch (kind_) {
      case Kind::Constant: return c_;
      case Kind::Atom: return q0_ + (1.0 - q0_) * s_ / 2.0;
      case Kind::Continuous: break;
    }
    const auto* pareto = std::get_if<detail::ParetoTail>(&tail_);
    const auto* param = std::get_if<detail::ParametricTail>(&tail_);
    if (map_ == detail::MapKind::Identity) {
      if (pareto) {
        const double al = pareto->alpha();
        return al > 2.0 ? pareto->x_min() * (al - 1.0) / (al - 2.0) : kInf;
      }
      if (param->b() == 0.0) {
        // edge + int_edge^inf a exp(-(v/c1)^tau) dv
        const double t = param->tau(), c1 = param->c1();
        if (param->a() == 1.0) return c1 * std::tgamma(1.0 + 1.0 / t);
        return param->edge() +
               param->a() * c1 / t * boost::math::tgamma(1.0 / t, std::log(param->a()));
      }
    }
    if (map_ == detail::MapKind::ReflectIdentity && pareto) {
      const double al = pareto->alpha();
      return x0_ - (al - 1.0) / (al * pareto->x_min());
    }
    return expect([](double w) { return w; }, -kInf, kInf, {}, {1e-13, 1e-15, 4000});
  }

  WeightFamily family_;
  Kind kind_ = Kind::Constant;
  double c_ = 1.0, q0_ = 1.0, s_ = 0.5, x0_ = 1.0;
  std::variant<detail::ParametricTail, detail::ParetoTail> tail_;
  detail::MapKind map_ = detail::MapKind::Identity;
  double raw_mean_ = 1.0;
  double scale_ = 1.0;
};

// ---------------------------------------------------------------------------
// Free-function interface.

inline double sample(const WeightFamily& f, RandomStream& rng) { return WeightLaw(f).sample(rng); }

/// Draw fed by the uniform u in (0,1) (survival inversion).
inline double sample_with_uniform(const WeightFamily& f, double u) { return WeightLaw(f).quantile(u); }

inline double tail_prob(const WeightFamily& f, double x) {
  if (x < 0.0) throw DomainError("tail_prob requires x >= 0");
  return WeightLaw(f).tail_prob(x);
}

inline double mean(const WeightFamily& f) { return WeightLaw(f).mean(); }

/// Scale-free moments of bounded laws use the essential supremum.
inline double essential_sup(const WeightFamily& f) { return WeightLaw(f).sup(); }

struct NormalizingSequences {
  double n = kNaN;
  std::optional<double> a_n, b_n, u_n, t_n, gamma, theta_m;
};

namespace detail {

inline double log_checked(double n) {
  if (!(n >= 2.0) || !std::isfinite(n)) throw DomainError("normalizing sequences require n >= 2");
  return std::log(n);
}

struct PairAB {
  double a, b;
};

// Closed-form centering for a tail a v^b exp(-(v/c1)^tau).
inline PairAB rv_ab(double tau, double c1, double a, double b, double L) {
  const double c2 = c1 / tau;
  const double an = c2 * std::pow(L, 1.0 / tau - 1.0);
  const double corr = (b == 0.0 ? 0.0 : (b / tau) * std::log(L) + b * std::log(c1)) + std::log(a);
  return {an, c1 * std::pow(L, 1.0 / tau) + an * corr};
}

}  // namespace detail

/// Extreme-value normalizing sequences of the raw law (before any mean scaling).
/// n may be any real >= 2.
inline NormalizingSequences raw_norm_seqs(const WeightFamily& f, double n, int m) {
  const double L = detail::log_checked(n);
  if (m < 1) throw DomainError("m must be >= 1");
  const WeightLaw law(f);
  NormalizingSequences out;
  out.n = n;
  const Classification c = classify(f);
  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, GumbelRV>) {
          auto ab = detail::rv_ab(spec.tau, spec.c1, spec.a, spec.b, L);
          out.a_n = ab.a;
          out.b_n = ab.b;
        } else if constexpr (std::is_same_v<T, GumbelSV>) {
          const auto& g = spec.inner;
          auto ab = detail::rv_ab(g.tau, g.c1, g.a, g.b, L);
          out.b_n = std::log1p(ab.b);
          out.a_n = ab.a / (1.0 + ab.b);
        } else if constexpr (std::is_same_v<T, GumbelRaV>) {
          const double c2 = spec.c1 / spec.tau;
          const double p = std::pow(L, 1.0 / spec.tau - 1.0);
          const double corr = (spec.b == 0.0 ? 0.0 : (spec.b / spec.tau) * std::log(L) + spec.b * std::log(spec.c1)) +
                              std::log(spec.a);
          const double log_b = spec.c1 * std::pow(L, 1.0 / spec.tau) + c2 * p * corr;
          if (!(log_b > 0.0)) throw DomainError("n too small: log b_n must be positive for t_n");
          out.b_n = std::exp(log_b);
          out.a_n = c2 * p * *out.b_n;
          out.t_n = std::exp(-spec.tau * L / log_b);
        } else if constexpr (std::is_same_v<T, FrechetPareto>) {
          out.u_n = spec.x_min * std::pow(n, 1.0 / (spec.alpha - 1.0));
        }
      },
      f.law);
  if (!std::isnan(c.tau)) out.gamma = 1.0 / (c.tau + 1.0);
  if (is_bounded(c.cls)) out.theta_m = 1.0 + law.raw_mean() / (law.sup() * law.scale() * m);
  return out;
}

/// Normalizing sequences of the produced weights. With mean normalization the
/// scale sequences a_n, b_n, u_n are divided by the raw mean; t_n is a property
/// of the raw law and is left unchanged.
inline NormalizingSequences norm_seqs(const WeightFamily& f, double n, int m = 1) {
  NormalizingSequences out = raw_norm_seqs(f, n, m);
  const WeightLaw law(f);
  const double sc = law.scale();
  if (sc != 1.0) {
    if (out.a_n) *out.a_n /= sc;
    if (out.b_n) *out.b_n /= sc;
    if (out.u_n) *out.u_n /= sc;
  }
  return out;
}

/// Unit-mean sequences: the scales of the law rescaled to E[W] = 1, regardless
/// of the family's normalize flag. Requires a finite mean unless the law is
/// Frechet with alpha <= 2, whose scales are returned raw.
inline NormalizingSequences unit_mean_seqs(const WeightFamily& f, double n, int m = 1) {
  WeightFamily g = f;
  g.normalize_mean = true;
  return norm_seqs(g, n, m);
}

/// The bounded law of x0 - 1/X for X drawn from x_family.
inline WeightFamily bounded_from_unbounded(const WeightFamily& x_family, double x0) {
  Reflected r;
  r.x0 = x0;
  if (auto* p = std::get_if<FrechetPareto>(&x_family.law)) {
    r.inner = *p;
  } else if (auto* g = std::get_if<GumbelRV>(&x_family.law)) {
    r.inner = *g;
  } else if (auto* h = std::get_if<GumbelRaV>(&x_family.law)) {
    r.inner = *h;
  } else {
    throw DomainError("bounded_from_unbounded needs a Pareto, RV or RaV input law");
  }
  WeightFamily out{r, x_family.normalize_mean};
  WeightLaw check(out);  // validates support against x0
  return out;
}

// ---------------------------------------------------------------------------
// Config text.

namespace detail {
inline void put_tail(KeyValues& kv, double tau, double c1, double a, double b) {
  kv.set("tau", tau);
  kv.set("c1", c1);
  kv.set("a", a);
  kv.set("b", b);
}
}  // namespace detail

inline KeyValues family_to_kv(const WeightFamily& f) {
  KeyValues kv;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Constant>) {
          kv.set("family", "constant");
          kv.set("c", s.c);
        } else if constexpr (std::is_same_v<T, Atom>) {
          kv.set("family", "atom");
          kv.set("q0", s.q0);
          kv.set("s", s.s);
        } else if constexpr (std::is_same_v<T, GumbelRV>) {
          kv.set("family", "gumbel_rv");
          detail::put_tail(kv, s.tau, s.c1, s.a, s.b);
        } else if constexpr (std::is_same_v<T, GumbelRaV>) {
          kv.set("family", "gumbel_rav");
          detail::put_tail(kv, s.tau, s.c1, s.a, s.b);
        } else if constexpr (std::is_same_v<T, GumbelSV>) {
          kv.set("family", "gumbel_sv");
          detail::put_tail(kv, s.inner.tau, s.inner.c1, s.inner.a, s.inner.b);
        } else if constexpr (std::is_same_v<T, FrechetPareto>) {
          kv.set("family", "frechet_pareto");
          kv.set("alpha", s.alpha);
          kv.set("x_min", s.x_min);
        } else if constexpr (std::is_same_v<T, Reflected>) {
          kv.set("x0", s.x0);
          if (auto* p = std::get_if<FrechetPareto>(&s.inner)) {
            kv.set("family", "bounded_weibull");
            kv.set("alpha", p->alpha);
            kv.set("x_min", p->x_min);
          } else if (auto* g = std::get_if<GumbelRV>(&s.inner)) {
            kv.set("family", "bounded_gumbel_rv");
            detail::put_tail(kv, g->tau, g->c1, g->a, g->b);
          } else {
            const auto& h = std::get<GumbelRaV>(s.inner);
            kv.set("family", "bounded_gumbel_rav");
            detail::put_tail(kv, h.tau, h.c1, h.a, h.b);
          }
        }
      },
      f.law);
  kv.set("normalize_mean", f.normalize_mean);
  return kv;
}

/// Builds a family from config keys. Missing parameters take the documented
/// defaults: c=1; q0=1, s=0.5; tau=1, c1=1, a=1, b=0 (gumbel_rav: tau=2);
/// alpha=3; x0=1; Pareto x_min=(alpha-2)/(alpha-1) when normalize_mean is set
/// and alpha > 2, otherwise 1; bounded_gumbel_rv a=exp((x0 c1)^-tau), which
/// conditions the inner Weibull on X >= 1/x0.
inline WeightFamily family_from_kv(const KeyValues& kv) {
  const std::string name = kv.str("family", "constant");
  const bool norm = kv.boolean("normalize_mean", false);
  WeightFamily f;
  f.normalize_mean = norm;
  auto rv = [&](double tau_default) {
    return GumbelRV{kv.real("tau", tau_default), kv.real("c1", 1.0), kv.real("a", 1.0), kv.real("b", 0.0)};
  };
  if (name == "constant") {
    f.law = Constant{kv.real("c", 1.0)};
  } else if (name == "atom") {
    f.law = Atom{kv.real("q0", 1.0), kv.real("s", 0.5)};
  } else if (name == "gumbel_rv") {
    f.law = rv(1.0);
  } else if (name == "gumbel_rav") {
    auto g = rv(2.0);
    f.law = GumbelRaV{g.tau, g.c1, g.a, g.b};
  } else if (name == "gumbel_sv") {
    f.law = GumbelSV{rv(1.0)};
  } else if (name == "frechet_pareto") {
    const double alpha = kv.real("alpha", 3.0);
    const double dflt = (norm && alpha > 2.0) ? (alpha - 2.0) / (alpha - 1.0) : 1.0;
    f.law = FrechetPareto{alpha, kv.real("x_min", dflt)};
  } else if (name == "bounded_weibull") {
    f.law = Reflected{FrechetPareto{kv.real("alpha", 3.0), kv.real("x_min", 1.0)}, kv.real("x0", 1.0)};
  } else if (name == "bounded_gumbel_rv") {
    const double x0 = kv.real("x0", 1.0);
    const double tau = kv.real("tau", 1.0), c1 = kv.real("c1", 1.0);
    const double a = kv.real("a", std::exp(std::pow(x0 * c1, -tau)));
    f.law = Reflected{GumbelRV{tau, c1, a, kv.real("b", 0.0)}, x0};
  } else if (name == "bounded_gumbel_rav") {
    auto g = rv(2.0);
    f.law = Reflected{GumbelRaV{g.tau, g.c1, g.a, g.b}, kv.real("x0", 1.0)};
  } else {
    throw DomainError("unknown weight family '" + name + "'");
  }
  WeightLaw check(f);
  return f;
}

inline std::string describe(const WeightFamily& f) { return family_to_kv(f).to_line(); }

}  // namespace wrg
