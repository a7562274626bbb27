#pragma once

// Payoffs f on paths. Stage-additive payoffs expose their per-step terms so
// evaluators can decompose the inner suprema stepwise.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "treedro/common.hpp"

namespace treedro {

class PathFunctional {
 public:
  enum Kind {
    LookbackCall,    // (x_N - x_1 + 1 - K)^+            (scalar steps)
    CalendarSpread,  // (x_N - K)^+ - (x_1 - K)^+        (stage-additive)
    TerminalQuadratic,  // |x_N|^2                       (stage-additive)
    SumQuadratic,       // sum_n |x_n|^2                 (stage-additive)
    Tabulated,          // explicit per-path values
    Custom,             // arbitrary callable, treated as general
  };

  static PathFunctional lookback_call(double strike);
  static PathFunctional calendar_spread(double strike);
  static PathFunctional terminal_quadratic();
  static PathFunctional sum_quadratic();
  // tabulated: must cover every path it is evaluated on (within tol)
  static PathFunctional tabulated(std::vector<Path> paths,
                                  std::vector<double> values,
                                  double tol = 1e-9);
  static PathFunctional custom(std::function<double(const Path&)> fn,
                               bool stage_additive = false,
                               std::function<double(int, const Vec&)> stage_fn =
                                   nullptr);

  Kind kind() const { return kind_; }
  double strike() const { return strike_; }
  bool stage_additive() const { return stage_additive_; }

  double eval(const Path& x) const;
  // per-step term of a stage-additive payoff; n is 1-based, N = path length
  double stage_eval(int n, int horizon, const Vec& y) const;

  // additive constant (translation f + m); keeps stage structure by folding
  // the shift into the last stage term
  PathFunctional shifted(double m) const;
  double shift() const { return shift_; }

  std::string describe() const;

 private:
  Kind kind_ = Custom;
  double strike_ = 0.0;
  double shift_ = 0.0;
  bool stage_additive_ = false;
  std::vector<Path> tab_paths_;
  std::vector<double> tab_values_;
  double tab_tol_ = 1e-9;
  std::function<double(const Path&)> fn_;
  std::function<double(int, const Vec&)> stage_fn_;
};

}  // namespace treedro
