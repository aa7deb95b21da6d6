#include "harkit/grad_check.hpp"

#include <cmath>

#include "harkit/errors.hpp"

namespace harkit {

namespace {
double evaluate(const TapeObjective& fn, const ParamStore& point) {
  Tape tape;
  Tape::Value root = fn(tape, point);
  const Tensor& v = tape.value(root);
  if (v.size() != 1) throw DimensionError("grad_check: objective must be scalar");
  return v[0];
}
}  // namespace

double grad_check(const TapeObjective& fn, ParamStore& point, double h) {
  Tape tape;
  Tape::Value root = fn(tape, point);
  if (tape.value(root).size() != 1) {
    throw DimensionError("grad_check: objective must be scalar");
  }
  tape.backward(root);
  GradientMap analytic = tape.parameter_gradients();

  double worst = 0.0;
  for (const std::string& name : point.names()) {
    Tensor& theta = point.at(name);
    const Tensor* ga = nullptr;
    auto it = analytic.find(name);
    if (it != analytic.end()) ga = &it->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = evaluate(fn, point);
      theta[i] = saved - h;
      const double down = evaluate(fn, point);
      theta[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic_i = ga ? (*ga)[i] : 0.0;
      const double err = std::abs(analytic_i - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace harkit
