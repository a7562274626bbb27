#pragma once

// Convex penalties L on the transport discrepancy and their conjugates
// L*(lambda) = sup_t {lambda t - L(t)}.

#include <string>

#include "treedro/common.hpp"

namespace treedro {

struct Penalty {
  enum Kind { Ball, Linear, Quadratic } kind = Ball;
  double param = 0.0;  // Ball: delta >= 0; Linear: kappa > 0; Quadratic: beta > 0

  static Penalty ball(double delta);
  static Penalty linear(double kappa);
  static Penalty quadratic(double beta);

  // L(t) for t >= 0
  ExtReal eval(double t) const;
  // upper end of the lambda domain where L* is finite (+inf for Ball/Quadratic)
  ExtReal lambda_domain_max() const;
  std::string describe() const;
};

// L*(lambda): Ball(delta) -> lambda*delta; Linear(kappa) -> 0 on [0,kappa],
// +inf beyond; Quadratic(beta), i.e. L(t) = t^2/(2 beta), -> beta lambda^2/2.
ExtReal conjugate(const Penalty& L, double lambda);

}  // namespace treedro
