#include "treedro/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace treedro {

namespace {

class Memo {
 public:
  Memo(const std::function<ExtReal(double)>& h, MinimizeResult& res)
      : h_(h), res_(res) {}

  ExtReal operator()(double x) {
    auto it = cache_.find(x);
    if (it != cache_.end()) return it->second;
    ExtReal v = h_(x);
    cache_.emplace(x, v);
    ++res_.evals;
    if (v.finite()) {
      res_.probes.emplace_back(x, v.v);
      if (!res_.found_finite || v.v < res_.value) {
        res_.found_finite = true;
        res_.value = v.v;
        res_.x = x;
      }
    }
    return v;
  }

 private:
  const std::function<ExtReal(double)>& h_;
  MinimizeResult& res_;
  std::map<double, ExtReal> cache_;
};

// shrink [fin, infx] (h(fin) finite, h(infx) = +inf) onto the finite boundary
double bisect_boundary(Memo& f, double fin, double infx) {
  for (int i = 0; i < 90 && infx - fin > 1e-15 * (1.0 + std::fabs(infx)); ++i) {
    const double mid = 0.5 * (fin + infx);
    if (f(mid).finite())
      fin = mid;
    else
      infx = mid;
  }
  return fin;
}

bool nearly_flat(const ExtReal& next, const ExtReal& cur) {
  if (next.inf || cur.inf) return false;
  return next.v >= cur.v - 1e-13 * (1.0 + std::fabs(cur.v));
}

}  // namespace

MinimizeResult minimize_convex(const std::function<ExtReal(double)>& h,
                               double lo, double cap,
                               const MinimizeOptions& opts) {
  MinimizeResult res;
  Memo f(h, res);
  if (!(cap >= lo)) throw ValidationError("minimize_convex: cap < lo");

  ExtReal h_lo = f(lo);
  if (h_lo.inf) {
    // h is +inf on a left interval (convexity: the finite region is an
    // interval); walk right for any finite value, then bisect the boundary.
    double prev = lo;
    double cur = std::max(std::min(opts.start, cap), lo + 1e-12 * (1.0 + lo));
    while (cur < cap && f(cur).inf) {
      prev = cur;
      cur = std::min(cur * 2.0, cap);
    }
    if (f(cur).inf) {
      res.bracket_lo = lo;
      res.bracket_hi = cap;
      return res;  // found_finite = false: +inf everywhere probed
    }
    // leftmost finite point, approached from the infinite side
    double infx = prev;
    for (int i = 0; i < 90 && cur - infx > 1e-15 * (1.0 + std::fabs(cur)); ++i) {
      const double mid = 0.5 * (infx + cur);
      if (f(mid).finite())
        cur = mid;
      else
        infx = mid;
    }
    lo = cur;
    h_lo = f(lo);
  }

  double a = lo, b = cap;
  if (cap == lo) {
    res.bracket_lo = res.bracket_hi = lo;
    return res;
  }

  const double start = std::clamp(opts.start, lo, cap);
  ExtReal h_start = (start > lo) ? f(start) : h_lo;
  if (start > lo &&
      (h_lo < h_start || h_start.inf || nearly_flat(h_start, h_lo))) {
    // minimum already bracketed left of the first doubling probe
    b = h_start.inf ? bisect_boundary(f, lo, start) : start;
  } else {
    // double from `start` until h stops decreasing, goes +inf, or hits cap
    double prev = lo, cur = start;
    ExtReal h_cur = h_start;
    for (;;) {
      if (cur >= cap) {
        res.on_cap = true;  // still decreasing when the cap was reached
        a = prev;
        b = cap;
        break;
      }
      const double next = std::min(cur * 2.0, cap);
      const ExtReal h_next = f(next);
      if (h_next.inf) {
        a = prev;
        b = bisect_boundary(f, cur, next);
        break;
      }
      if (nearly_flat(h_next, h_cur)) {
        a = prev;
        b = next;
        break;
      }
      prev = cur;
      cur = next;
      h_cur = h_next;
    }
  }

  res.bracket_lo = a;
  res.bracket_hi = b;

  static const double rho = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - rho * (b - a);
  double x2 = a + rho * (b - a);
  ExtReal f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < opts.max_golden_iters; ++it) {
    if (b - a <= opts.tol_rel * (1.0 + std::fabs(a) + std::fabs(b))) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - rho * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + rho * (b - a);
      f2 = f(x2);
    }
  }
  f(0.5 * (a + b));
  return res;
}

}  // namespace treedro
