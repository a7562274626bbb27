#include "treedro/payoff.hpp"

#include <cmath>

namespace treedro {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

double sqnorm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += sq(x);
  return s;
}

bool vec_close(const Vec& a, const Vec& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace

PathFunctional PathFunctional::lookback_call(double strike) {
  PathFunctional f;
  f.kind_ = LookbackCall;
  f.strike_ = strike;
  f.stage_additive_ = false;  // the positive part couples first and last step
  return f;
}

PathFunctional PathFunctional::calendar_spread(double strike) {
  PathFunctional f;
  f.kind_ = CalendarSpread;
  f.strike_ = strike;
  f.stage_additive_ = true;
  return f;
}

PathFunctional PathFunctional::terminal_quadratic() {
  PathFunctional f;
  f.kind_ = TerminalQuadratic;
  f.stage_additive_ = true;
  return f;
}

PathFunctional PathFunctional::sum_quadratic() {
  PathFunctional f;
  f.kind_ = SumQuadratic;
  f.stage_additive_ = true;
  return f;
}

PathFunctional PathFunctional::tabulated(std::vector<Path> paths,
                                         std::vector<double> values,
                                         double tol) {
  if (paths.size() != values.size() || paths.empty())
    throw ValidationError("tabulated payoff: size mismatch or empty table");
  PathFunctional f;
  f.kind_ = Tabulated;
  f.tab_paths_ = std::move(paths);
  f.tab_values_ = std::move(values);
  f.tab_tol_ = tol;
  return f;
}

PathFunctional PathFunctional::custom(
    std::function<double(const Path&)> fn, bool stage_additive,
    std::function<double(int, const Vec&)> stage_fn) {
  PathFunctional f;
  f.kind_ = Custom;
  f.fn_ = std::move(fn);
  f.stage_additive_ = stage_additive;
  f.stage_fn_ = std::move(stage_fn);
  if (f.stage_additive_ && !f.stage_fn_)
    throw ValidationError("custom payoff: stage-additive without stage terms");
  return f;
}

PathFunctional PathFunctional::shifted(double m) const {
  PathFunctional f = *this;
  f.shift_ += m;
  return f;
}

double PathFunctional::eval(const Path& x) const {
  double v = 0.0;
  switch (kind_) {
    case LookbackCall:
      if (x.front().size() != 1)
        throw ValidationError("lookback_call: needs scalar steps");
      v = pos(x.back()[0] - x.front()[0] + 1.0 - strike_);
      break;
    case CalendarSpread:
      if (x.front().size() != 1)
        throw ValidationError("calendar_spread: needs scalar steps");
      v = pos(x.back()[0] - strike_) - pos(x.front()[0] - strike_);
      break;
    case TerminalQuadratic:
      v = sqnorm(x.back());
      break;
    case SumQuadratic:
      for (const Vec& s : x) v += sqnorm(s);
      break;
    case Tabulated: {
      int hit = -1;
      for (std::size_t i = 0; i < tab_paths_.size(); ++i) {
        if (tab_paths_[i].size() != x.size()) continue;
        bool same = true;
        for (std::size_t n = 0; n < x.size() && same; ++n)
          same = vec_close(tab_paths_[i][n], x[n], tab_tol_);
        if (same) {
          hit = static_cast<int>(i);
          break;
        }
      }
      if (hit < 0)
        throw ValidationError("tabulated payoff: path not covered by table");
      v = tab_values_[hit];
      break;
    }
    case Custom:
      v = fn_(x);
      break;
  }
  return v + shift_;
}

double PathFunctional::stage_eval(int n, int horizon, const Vec& y) const {
  if (!stage_additive_)
    throw ValidationError("payoff: stage term of a non-additive payoff");
  double v = 0.0;
  switch (kind_) {
    case CalendarSpread:
      if (n == horizon) v = pos(y[0] - strike_);
      if (n == 1) v -= pos(y[0] - strike_);  // n==1==horizon nets to zero
      break;
    case TerminalQuadratic:
      v = (n == horizon) ? sqnorm(y) : 0.0;
      break;
    case SumQuadratic:
      v = sqnorm(y);
      break;
    case Custom:
      v = stage_fn_(n, y);
      break;
    default:
      throw ValidationError("payoff: no stage decomposition for this kind");
  }
  if (n == horizon) v += shift_;
  return v;
}

std::string PathFunctional::describe() const {
  switch (kind_) {
    case LookbackCall:
      return "lookback_call(" + format_value(strike_) + ")";
    case CalendarSpread:
      return "calendar_spread(" + format_value(strike_) + ")";
    case TerminalQuadratic:
      return "terminal_quadratic";
    case SumQuadratic:
      return "sum_quadratic";
    case Tabulated:
      return "tabulated";
    case Custom:
      return "custom";
  }
  return "?";
}

}  // namespace treedro
