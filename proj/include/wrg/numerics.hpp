#pragma once

// Thin wrappers over Boost.Math quadrature and bracketing root finders that
// turn non-convergence into wrg::NumericError.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "errors.hpp"

namespace wrg::numerics {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  unsigned max_intervals = 4000;
};

namespace detail {

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// Kronrod-31 value with |K31 - G15| as the error. The error reported by
// gauss_kronrod::integrate is not rescaled to [lo, hi] in some Boost releases,
// so the Gauss companion is evaluated here.
template <class G>
Segment gk_segment(G& g, double lo, double hi) {
  const double k = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 0, 0.0);
  const double q = boost::math::quadrature::gauss<double, 15>::integrate(g, lo, hi);
  const double err = std::max(std::abs(k - q), 2.0 * std::numeric_limits<double>::epsilon() * std::abs(k));
  return {lo, hi, k, err};
}

// Globally adaptive bisection on a finite interval, largest error first.
template <class G>
double adaptive(G&& g, double a, double b, const QuadratureOptions& opt, double orig_a, double orig_b) {
  std::priority_queue<Segment> heap;
  Segment first = gk_segment(g, a, b);
  double total = first.value, err = first.error;
  heap.push(first);
  unsigned count = 1;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && count < opt.max_intervals) {
    Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.lo + s.hi);
    if (!(mid > s.lo && mid < s.hi)) {
      heap.push(s);
      break;
    }
    Segment l = gk_segment(g, s.lo, mid), r = gk_segment(g, mid, s.hi);
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    count += 1;
  }
  // Re-sum to drop accumulated cancellation in the running totals.
  total = 0.0;
  err = 0.0;
  for (; !heap.empty(); heap.pop()) {
    total += heap.top().value;
    err += heap.top().error;
  }
  if (!std::isfinite(total) || err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    std::ostringstream os;
    os.precision(17);
    os << "quadrature did not converge on [" << orig_a << ", " << orig_b << "]: value=" << total
       << " error_estimate=" << err << " intervals=" << count;
    throw NumericError(os.str());
  }
  return total;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (15/31) integral of f over [a,b]; either end may be
/// infinite.
template <class F>
double integrate(F&& f, double a, double b, QuadratureOptions opt = {}) {
  if (!(a < b)) return 0.0;
  const bool inf_a = std::isinf(a), inf_b = std::isinf(b);
  if (inf_a && inf_b) return integrate(f, a, 0.0, opt) + integrate(f, 0.0, b, opt);
  if (inf_b) {
    auto g = [&](double t) {
      const double u = 1.0 - t;
      const double v = f(a + t / u);
      return v == 0.0 ? 0.0 : v / (u * u);
    };
    return detail::adaptive(g, 0.0, 1.0, opt, a, b);
  }
  if (inf_a) {
    auto g = [&](double t) {
      const double u = 1.0 - t;
      const double v = f(b - t / u);
      return v == 0.0 ? 0.0 : v / (u * u);
    };
    return detail::adaptive(g, 0.0, 1.0, opt, a, b);
  }
  return detail::adaptive(f, a, b, opt, a, b);
}

/// Integral over [a,b] split at the interior breakpoints (those outside are ignored).
template <class F, class Range>
double integrate_split(F&& f, double a, double b, const Range& breakpoints,
                       QuadratureOptions opt = {}) {
  double total = 0.0;
  double lo = a;
  for (double p : breakpoints) {
    if (p > lo && p < b && std::isfinite(p)) {
      total += integrate(f, lo, p, opt);
      lo = p;
    }
  }
  return total + integrate(f, lo, b, opt);
}

/// Root of a function that is increasing on [lo, hi] with f(lo) <= 0 <= f(hi),
/// to relative tolerance `rel_tol`.
template <class F>
double solve_increasing(F&& f, double lo, double hi, double rel_tol = 1e-12) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) {
    std::ostringstream os;
    os << "root not bracketed on [" << lo << ", " << hi << "]";
    throw NumericError(os.str());
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t iters = 400;
  auto tol = [rel_tol](double x, double y) {
    return std::abs(x - y) <= rel_tol * std::max(std::abs(x), std::abs(y));
  };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (r.first + r.second);
}

/// Expand `hi` geometrically until f(hi) >= 0 (f increasing).
template <class F>
double bracket_above(F&& f, double start) {
  double hi = std::max(start, 1.0);
  for (int i = 0; i < 2000; ++i) {
    if (f(hi) >= 0.0) return hi;
    hi *= 2.0;
  }
  throw NumericError("failed to bracket root from above");
}

}  // namespace wrg::numerics
