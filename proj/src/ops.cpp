#include "harkit/ops.hpp"

#include <algorithm>
#include <cmath>

#include "harkit/errors.hpp"

namespace harkit {

namespace detail {

void require_no_negatives(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (v < 0.0) throw DomainError(std::string(what) + ": negative entry");
  }
}

void require_one_hot(const Tensor& t) {
  std::size_t ones = 0;
  for (double v : t.values()) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw LabelError("target is not one-hot: entry " + std::to_string(v));
    }
  }
  if (ones != 1) {
    throw LabelError("target is not one-hot: " + std::to_string(ones) + " ones");
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
  }
}

}  // namespace detail

Tensor softmax(const Tensor& v) {
  require_finite(v, "softmax input");
  Tensor out(v.shape());
  const std::size_t n = v.size();
  double hi = v[0];
  for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, v[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(v[i] - hi);
    z += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= z;
  return out;
}

double mean_kl(const Tensor& p_true, const Tensor& p_predict) {
  detail::require_same_shape(p_true, p_predict, "mean_kl");
  detail::require_no_negatives(p_true, "mean_kl p_true");
  detail::require_no_negatives(p_predict, "mean_kl p_predict");
  const std::size_t n = p_true.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pt = p_true[i];
    if (pt == 0.0) continue;  // 0 * log 0 := 0
    acc += pt * std::log(pt / std::max(p_predict[i], kProbFloor));
  }
  return acc / static_cast<double>(n);
}

double cross_entropy(const Tensor& y_predict, const Tensor& c_true) {
  detail::require_same_shape(y_predict, c_true, "cross_entropy");
  detail::require_one_hot(c_true);
  double acc = 0.0;
  for (std::size_t j = 0; j < c_true.size(); ++j) {
    if (c_true[j] == 1.0) acc -= std::log(std::max(y_predict[j], kProbFloor));
  }
  return acc;
}

double mse(const Tensor& p_predict, const Tensor& p_true) {
  detail::require_same_shape(p_predict, p_true, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < p_predict.size(); ++i) {
    const double d = p_predict[i] - p_true[i];
    acc += d * d;
  }
  return acc / static_cast<double>(p_predict.size());
}

}  // namespace harkit
