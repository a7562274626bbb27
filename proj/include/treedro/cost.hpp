#pragma once

// Transport costs c(x,y): separable sums of per-step ground costs, or a
// general path-pair function. Builtins vanish exactly on the diagonal.

#include <functional>
#include <vector>

#include "treedro/common.hpp"

namespace treedro {

struct GroundCost {
  enum Kind { SqEuclid, Euclid, Table } kind = SqEuclid;

  // Table mode: values[i][j] = cost between xs[i] and ys[j]; lookups match
  // points within `tol` and fail loudly otherwise.
  std::vector<Vec> xs, ys;
  std::vector<std::vector<double>> values;
  double tol = 1e-9;

  double eval(const Vec& x, const Vec& y) const;
};

class CostSpec {
 public:
  // separable: c(x,y) = sum_n c_n(x_n, y_n)
  static CostSpec separable(std::vector<GroundCost> steps);
  // same ground cost at every step
  static CostSpec separable_uniform(GroundCost g, int horizon);
  static CostSpec sqdist(int horizon);
  static CostSpec dist(int horizon);
  // general path-pair function (used by the bicausal recursion and oracles)
  static CostSpec general(std::function<double(const Path&, const Path&)> fn);

  bool is_separable() const { return separable_; }
  const GroundCost& step(int n) const { return steps_.at(n - 1); }  // 1-based

  double eval(const Path& x, const Path& y) const;
  double eval_step(int n, const Vec& x, const Vec& y) const;  // separable only

 private:
  bool separable_ = true;
  std::vector<GroundCost> steps_;
  std::function<double(const Path&, const Path&)> general_;
};

}  // namespace treedro
