#include "treedro/cost.hpp"

#include <cmath>

namespace treedro {

namespace {

bool vec_close(const Vec& a, const Vec& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace

double GroundCost::eval(const Vec& x, const Vec& y) const {
  switch (kind) {
    case SqEuclid: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += sq(x[i] - y[i]);
      return s;
    }
    case Euclid: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += sq(x[i] - y[i]);
      return std::sqrt(s);
    }
    case Table: {
      int xi = -1, yj = -1;
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (vec_close(xs[i], x, tol)) {
          xi = static_cast<int>(i);
          break;
        }
      for (std::size_t j = 0; j < ys.size(); ++j)
        if (vec_close(ys[j], y, tol)) {
          yj = static_cast<int>(j);
          break;
        }
      if (xi < 0 || yj < 0)
        throw ValidationError("tabulated ground cost: point not in table");
      return values[xi][yj];
    }
  }
  throw ValidationError("ground cost: bad kind");
}

CostSpec CostSpec::separable(std::vector<GroundCost> steps) {
  CostSpec c;
  c.separable_ = true;
  c.steps_ = std::move(steps);
  return c;
}

CostSpec CostSpec::separable_uniform(GroundCost g, int horizon) {
  return separable(std::vector<GroundCost>(horizon, g));
}

CostSpec CostSpec::sqdist(int horizon) {
  GroundCost g;
  g.kind = GroundCost::SqEuclid;
  return separable_uniform(g, horizon);
}

CostSpec CostSpec::dist(int horizon) {
  GroundCost g;
  g.kind = GroundCost::Euclid;
  return separable_uniform(g, horizon);
}

CostSpec CostSpec::general(std::function<double(const Path&, const Path&)> fn) {
  CostSpec c;
  c.separable_ = false;
  c.general_ = std::move(fn);
  return c;
}

double CostSpec::eval(const Path& x, const Path& y) const {
  if (!separable_) return general_(x, y);
  if (x.size() != y.size() || x.size() != steps_.size())
    throw ValidationError("cost: path length mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n)
    s += steps_[n].eval(x[n], y[n]);
  return s;
}

double CostSpec::eval_step(int n, const Vec& x, const Vec& y) const {
  if (!separable_)
    throw ValidationError("cost: per-step evaluation of a non-separable cost");
  return steps_.at(n - 1).eval(x, y);
}

}  // namespace treedro
