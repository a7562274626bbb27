#include "treedro/penalty.hpp"

namespace treedro {

Penalty Penalty::ball(double delta) {
  if (delta < 0.0) throw ValidationError("ball penalty: delta must be >= 0");
  return Penalty{Ball, delta};
}

Penalty Penalty::linear(double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("linear penalty: kappa must be > 0");
  return Penalty{Linear, kappa};
}

Penalty Penalty::quadratic(double beta) {
  if (!(beta > 0.0))
    throw ValidationError("quadratic penalty: beta must be > 0");
  return Penalty{Quadratic, beta};
}

ExtReal Penalty::eval(double t) const {
  if (t < 0.0) throw ValidationError("penalty: negative argument");
  switch (kind) {
    case Ball:
      return t <= param ? ExtReal(0.0) : ExtReal::infinity();
    case Linear:
      return ExtReal(param * t);
    case Quadratic:
      return ExtReal(t * t / (2.0 * param));
  }
  throw ValidationError("penalty: bad kind");
}

ExtReal Penalty::lambda_domain_max() const {
  if (kind == Linear) return ExtReal(param);
  return ExtReal::infinity();
}

std::string Penalty::describe() const {
  switch (kind) {
    case Ball:
      return "ball(" + format_value(param) + ")";
    case Linear:
      return "linear(" + format_value(param) + ")";
    case Quadratic:
      return "quad(" + format_value(param) + ")";
  }
  return "?";
}

ExtReal conjugate(const Penalty& L, double lambda) {
  if (lambda < 0.0) throw ValidationError("conjugate: lambda must be >= 0");
  switch (L.kind) {
    case Penalty::Ball:
      return ExtReal(lambda * L.param);
    case Penalty::Linear:
      return lambda <= L.param ? ExtReal(0.0) : ExtReal::infinity();
    case Penalty::Quadratic:
      return ExtReal(L.param * lambda * lambda / 2.0);
  }
  throw ValidationError("conjugate: bad penalty kind");
}

}  // namespace treedro
