#pragma once

#include "harkit/tensor.hpp"

namespace harkit {

// Floor applied to predicted probabilities before any log.
inline constexpr double kProbFloor = 1e-12;

// Numerically stable softmax over a flat vector; output sums to 1 and is
// invariant to shifting all inputs by a constant.
Tensor softmax(const Tensor& v);

// (1/N) sum_i p_true[i] * ln(p_true[i] / max(p_pred[i], floor)), natural log,
// with 0*log(0) := 0.
double mean_kl(const Tensor& p_true, const Tensor& p_predict);

// -sum_j c_true[j] * ln(max(y_pred[j], floor)); c_true must be one-hot.
double cross_entropy(const Tensor& y_predict, const Tensor& c_true);

// Mean of squared elementwise differences.
double mse(const Tensor& p_predict, const Tensor& p_true);

namespace detail {
void require_no_negatives(const Tensor& t, const char* what);
void require_one_hot(const Tensor& t);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
}  // namespace detail

}  // namespace harkit
