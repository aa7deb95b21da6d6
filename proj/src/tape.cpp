#include "harkit/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "harkit/errors.hpp"
#include "harkit/ops.hpp"

namespace harkit {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

CMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return CMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + t.shape_string());
  }
}

}  // namespace

Tape::Value Tape::emit(Tensor value, std::function<void(Tape&)> back,
                       std::string param_name) {
  Tensor grad(value.shape());
  nodes_.push_back(Node{std::move(value), std::move(grad), std::move(param_name),
                        std::move(back)});
  return Value{nodes_.size() - 1};
}

Tape::Value Tape::input(Tensor t) {
  require_finite(t, "tape input");
  return emit(std::move(t), nullptr);
}

Tape::Value Tape::param(const ParamStore& store, const std::string& name) {
  return emit(store.at(name), nullptr, name);
}

Tape::Value Tape::linear(Value x, Value w, Value b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  require_rank(xv, 2, "linear x");
  require_rank(wv, 2, "linear w");
  require_rank(bv, 1, "linear b");
  const std::size_t n = xv.dim(0), din = xv.dim(1), dout = wv.dim(1);
  if (wv.dim(0) != din || bv.dim(0) != dout) {
    throw DimensionError("linear: x " + xv.shape_string() + " w " + wv.shape_string() +
                         " b " + bv.shape_string() + " do not conform");
  }

  Tensor out({n, dout});
  as_matrix(out, n, dout).noalias() = as_matrix(xv, n, din) * as_matrix(wv, din, dout);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dout; ++c) out.at(r, c) += bv[c];
  }

  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [x, w, b, out_v, n, din, dout](Tape& t) {
    auto go = as_matrix(t.grad(out_v), n, dout);
    as_matrix(t.grad_mut(x), n, din).noalias() +=
        go * as_matrix(t.value(w), din, dout).transpose();
    as_matrix(t.grad_mut(w), din, dout).noalias() +=
        as_matrix(t.value(x), n, din).transpose() * go;
    Tensor& gb = t.grad_mut(b);
    for (std::size_t c = 0; c < dout; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += t.grad(out_v).at(r, c);
      gb[c] += acc;
    }
  };
  return out_v;
}

Tape::Value Tape::conv1d(Value x, Value kernels, std::size_t stride, std::size_t groups) {
  const Tensor& xv = value(x);
  const Tensor& kv = value(kernels);
  require_rank(xv, 2, "conv1d x");
  require_rank(kv, 3, "conv1d kernels");
  if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
  const std::size_t c_in = xv.dim(0), t_in = xv.dim(1);
  const std::size_t f_out = kv.dim(0), c_g = kv.dim(1), k = kv.dim(2);
  if (groups < 1 || c_in % groups != 0 || f_out % groups != 0) {
    throw DimensionError("conv1d: channels " + std::to_string(c_in) + " / filters " +
                         std::to_string(f_out) + " not divisible by groups " +
                         std::to_string(groups));
  }
  if (c_g != c_in / groups) {
    throw DimensionError("conv1d: kernel group width " + std::to_string(c_g) +
                         " does not match channels/groups");
  }
  if (k > t_in) {
    throw WindowError("conv1d: kernel size " + std::to_string(k) +
                      " exceeds input length " + std::to_string(t_in));
  }

  const std::size_t t_out = (t_in - k) / stride + 1;
  const std::size_t f_g = f_out / groups;
  Tensor out({f_out, t_out});
  for (std::size_t f = 0; f < f_out; ++f) {
    const std::size_t c0 = (f / f_g) * c_g;
    for (std::size_t tpos = 0; tpos < t_out; ++tpos) {
      double acc = 0.0;
      for (std::size_t j = 0; j < c_g; ++j) {
        const double* xrow = xv.data() + (c0 + j) * t_in + tpos * stride;
        const double* krow = kv.data() + (f * c_g + j) * k;
        for (std::size_t kk = 0; kk < k; ++kk) acc += xrow[kk] * krow[kk];
      }
      out.at(f, tpos) = acc;
    }
  }

  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [x, kernels, out_v, stride, c_g, k, f_g, t_in, t_out,
                           f_out](Tape& t) {
    const Tensor& go = t.grad(out_v);
    const Tensor& xv2 = t.value(x);
    const Tensor& kv2 = t.value(kernels);
    Tensor& gx = t.grad_mut(x);
    Tensor& gk = t.grad_mut(kernels);
    for (std::size_t f = 0; f < f_out; ++f) {
      const std::size_t c0 = (f / f_g) * c_g;
      for (std::size_t tpos = 0; tpos < t_out; ++tpos) {
        const double g = go.at(f, tpos);
        if (g == 0.0) continue;
        for (std::size_t j = 0; j < c_g; ++j) {
          const double* xrow = xv2.data() + (c0 + j) * t_in + tpos * stride;
          const double* krow = kv2.data() + (f * c_g + j) * k;
          double* gxrow = gx.data() + (c0 + j) * t_in + tpos * stride;
          double* gkrow = gk.data() + (f * c_g + j) * k;
          for (std::size_t kk = 0; kk < k; ++kk) {
            gkrow[kk] += g * xrow[kk];
            gxrow[kk] += g * krow[kk];
          }
        }
      }
    }
  };
  return out_v;
}

namespace {
struct LstmCache {
  RowMat gi, gf, gg, go;  // gate activations, [T x H], original time order
  RowMat c, tc;           // cell state and tanh(cell)
};
}  // namespace

Tape::Value Tape::lstm(Value seq, Value w, Value u, Value b, bool reverse) {
  const Tensor& sv = value(seq);
  const Tensor& wv = value(w);
  const Tensor& uv = value(u);
  const Tensor& bv = value(b);
  require_rank(sv, 2, "lstm seq");
  require_rank(wv, 2, "lstm w");
  require_rank(uv, 2, "lstm u");
  require_rank(bv, 1, "lstm b");
  const std::size_t steps = sv.dim(0), d_in = sv.dim(1);
  if (steps < 1) throw LengthError("lstm: empty sequence");
  if (wv.dim(1) % 4 != 0) throw DimensionError("lstm: w columns must be 4*H");
  const std::size_t h = wv.dim(1) / 4;
  if (wv.dim(0) != d_in || uv.dim(0) != h || uv.dim(1) != 4 * h || bv.dim(0) != 4 * h) {
    throw DimensionError("lstm: gate parameter shapes inconsistent (D=" +
                         std::to_string(d_in) + ", H=" + std::to_string(h) + ")");
  }

  auto cache = std::make_shared<LstmCache>();
  cache->gi.resize(steps, h);
  cache->gf.resize(steps, h);
  cache->gg.resize(steps, h);
  cache->go.resize(steps, h);
  cache->c.resize(steps, h);
  cache->tc.resize(steps, h);

  // Input projection for all steps in one product.
  RowMat xw = as_matrix(sv, steps, d_in) * as_matrix(wv, d_in, 4 * h);

  Tensor out({steps, h});
  auto out_m = as_matrix(out, steps, h);
  auto u_m = as_matrix(uv, h, 4 * h);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(h);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(h);
  Eigen::RowVectorXd a(4 * h);

  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t step = reverse ? steps - 1 - s : s;
    a = xw.row(step) + h_prev * u_m;
    for (std::size_t j = 0; j < 4 * h; ++j) a[j] += bv[j];
    for (std::size_t j = 0; j < h; ++j) {
      const double gi = sigmoid(a[j]);
      const double gf = sigmoid(a[h + j]);
      const double gg = std::tanh(a[2 * h + j]);
      const double go = sigmoid(a[3 * h + j]);
      const double c = gf * c_prev[j] + gi * gg;
      const double tc = std::tanh(c);
      cache->gi(step, j) = gi;
      cache->gf(step, j) = gf;
      cache->gg(step, j) = gg;
      cache->go(step, j) = go;
      cache->c(step, j) = c;
      cache->tc(step, j) = tc;
      out_m(step, j) = go * tc;
      h_prev[j] = go * tc;
      c_prev[j] = c;
    }
  }

  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [seq, w, u, b, out_v, cache, reverse, steps, d_in, h](Tape& t) {
    const auto& cc = *cache;
    auto go_m = as_matrix(t.grad(out_v), steps, h);
    auto out_m2 = as_matrix(t.value(out_v), steps, h);
    auto u_m = as_matrix(t.value(u), h, 4 * h);
    auto w_m = as_matrix(t.value(w), d_in, 4 * h);

    RowMat da_all = RowMat::Zero(steps, 4 * h);
    Eigen::RowVectorXd dh_carry = Eigen::RowVectorXd::Zero(h);
    Eigen::RowVectorXd dc_carry = Eigen::RowVectorXd::Zero(h);

    for (std::size_t s = steps; s-- > 0;) {
      const std::size_t step = reverse ? steps - 1 - s : s;
      const bool has_prev = s > 0;
      const std::size_t prev = reverse ? step + 1 : step - 1;
      for (std::size_t j = 0; j < h; ++j) {
        const double dh = go_m(step, j) + dh_carry[j];
        const double gi = cc.gi(step, j), gf = cc.gf(step, j);
        const double gg = cc.gg(step, j), go = cc.go(step, j);
        const double tc = cc.tc(step, j);
        const double d_go = dh * tc;
        const double dc = dc_carry[j] + dh * go * (1.0 - tc * tc);
        const double d_gi = dc * gg;
        const double d_gf = dc * (has_prev ? cc.c(prev, j) : 0.0);
        const double d_gg = dc * gi;
        da_all(step, j) = d_gi * gi * (1.0 - gi);
        da_all(step, h + j) = d_gf * gf * (1.0 - gf);
        da_all(step, 2 * h + j) = d_gg * (1.0 - gg * gg);
        da_all(step, 3 * h + j) = d_go * go * (1.0 - go);
        dc_carry[j] = dc * gf;
      }
      dh_carry.noalias() = da_all.row(step) * u_m.transpose();
    }

    as_matrix(t.grad_mut(seq), steps, d_in).noalias() += da_all * w_m.transpose();
    as_matrix(t.grad_mut(w), d_in, 4 * h).noalias() +=
        as_matrix(t.value(seq), steps, d_in).transpose() * da_all;

    // Hidden-state inputs shifted by one processing step.
    RowMat h_prev_all = RowMat::Zero(steps, h);
    for (std::size_t s = 1; s < steps; ++s) {
      const std::size_t step = reverse ? steps - 1 - s : s;
      const std::size_t prev = reverse ? step + 1 : step - 1;
      h_prev_all.row(step) = out_m2.row(prev);
    }
    as_matrix(t.grad_mut(u), h, 4 * h).noalias() += h_prev_all.transpose() * da_all;

    Tensor& gb = t.grad_mut(b);
    for (std::size_t j = 0; j < 4 * h; ++j) gb[j] += da_all.col(j).sum();
  };
  return out_v;
}

Tape::Value Tape::transpose(Value x) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "transpose");
  const std::size_t r = xv.dim(0), c = xv.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = xv.at(i, j);
  }
  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [x, out_v, r, c](Tape& t) {
    const Tensor& go = t.grad(out_v);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += go.at(j, i);
    }
  };
  return out_v;
}

Tape::Value Tape::concat_cols(Value a, Value b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_rank(av, 2, "concat_cols a");
  require_rank(bv, 2, "concat_cols b");
  if (av.dim(0) != bv.dim(0)) {
    throw DimensionError("concat_cols: row mismatch " + av.shape_string() + " vs " +
                         bv.shape_string());
  }
  const std::size_t rows = av.dim(0), ca = av.dim(1), cb = bv.dim(1);
  Tensor out({rows, ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < ca; ++j) out.at(r, j) = av.at(r, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(r, ca + j) = bv.at(r, j);
  }
  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [a, b, out_v, rows, ca, cb](Tape& t) {
    const Tensor& go = t.grad(out_v);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < ca; ++j) ga.at(r, j) += go.at(r, j);
      for (std::size_t j = 0; j < cb; ++j) gb.at(r, j) += go.at(r, ca + j);
    }
  };
  return out_v;
}

Tape::Value Tape::mean_rows(Value x) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "mean_rows");
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) out[j] += xv.at(r, j);
  }
  for (std::size_t j = 0; j < cols; ++j) out[j] /= static_cast<double>(rows);
  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [x, out_v, rows, cols](Tape& t) {
    const Tensor& go = t.grad(out_v);
    Tensor& gx = t.grad_mut(x);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < cols; ++j) gx.at(r, j) += go[j] * inv;
    }
  };
  return out_v;
}

Tape::Value Tape::last_row(Value x) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "last_row");
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor out({cols});
  for (std::size_t j = 0; j < cols; ++j) out[j] = xv.at(rows - 1, j);
  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [x, out_v, rows, cols](Tape& t) {
    const Tensor& go = t.grad(out_v);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t j = 0; j < cols; ++j) gx.at(rows - 1, j) += go[j];
  };
  return out_v;
}

Tape::Value Tape::tanh(Value x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [x, out_v](Tape& t) {
    const Tensor& y = t.value(out_v);
    const Tensor& go = t.grad(out_v);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += go[i] * (1.0 - y[i] * y[i]);
  };
  return out_v;
}

Tape::Value Tape::softmax(Value v) {
  Tensor out = harkit::softmax(value(v));
  Value out_v = emit(std::move(out), nullptr);
  nodes_[out_v.id].back = [v, out_v](Tape& t) {
    const Tensor& p = t.value(out_v);
    const Tensor& gp = t.grad(out_v);
    Tensor& gv = t.grad_mut(v);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += gp[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) gv[i] += p[i] * (gp[i] - dot);
  };
  return out_v;
}

Tape::Value Tape::pick(Value v, std::size_t index) {
  const Tensor& vv = value(v);
  if (index >= vv.size()) {
    throw LabelError("pick: index " + std::to_string(index) + " out of range " +
                     std::to_string(vv.size()));
  }
  Value out_v = emit(Tensor::scalar(vv[index]), nullptr);
  nodes_[out_v.id].back = [v, out_v, index](Tape& t) {
    t.grad_mut(v)[index] += t.grad(out_v)[0];
  };
  return out_v;
}

Tape::Value Tape::sum(Value x) {
  const Tensor& xv = value(x);
  double acc = 0.0;
  for (double d : xv.values()) acc += d;
  Value out_v = emit(Tensor::scalar(acc), nullptr);
  nodes_[out_v.id].back = [x, out_v](Tape& t) {
    const double g = t.grad(out_v)[0];
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  };
  return out_v;
}

Tape::Value Tape::scale_add(Value a, double alpha, Value b, double beta) {
  if (value(a).size() != 1 || value(b).size() != 1) {
    throw DimensionError("scale_add: expects scalars");
  }
  Value out_v = emit(Tensor::scalar(alpha * value(a)[0] + beta * value(b)[0]), nullptr);
  nodes_[out_v.id].back = [a, b, out_v, alpha, beta](Tape& t) {
    const double g = t.grad(out_v)[0];
    t.grad_mut(a)[0] += alpha * g;
    t.grad_mut(b)[0] += beta * g;
  };
  return out_v;
}

Tape::Value Tape::mean_kl(Value predicted, Tensor true_dist) {
  const Tensor& p = value(predicted);
  const double loss = harkit::mean_kl(true_dist, p);
  Value out_v = emit(Tensor::scalar(loss), nullptr);
  auto target = std::make_shared<Tensor>(std::move(true_dist));
  nodes_[out_v.id].back = [predicted, out_v, target](Tape& t) {
    const double g = t.grad(out_v)[0];
    const Tensor& p2 = t.value(predicted);
    Tensor& gp = t.grad_mut(predicted);
    const double inv_n = 1.0 / static_cast<double>(p2.size());
    for (std::size_t i = 0; i < p2.size(); ++i) {
      const double pt = (*target)[i];
      if (pt == 0.0 || p2[i] < kProbFloor) continue;
      gp[i] += g * (-pt * inv_n / p2[i]);
    }
  };
  return out_v;
}

Tape::Value Tape::cross_entropy(Value predicted, Tensor one_hot) {
  const Tensor& y = value(predicted);
  const double loss = harkit::cross_entropy(y, one_hot);
  Value out_v = emit(Tensor::scalar(loss), nullptr);
  auto target = std::make_shared<Tensor>(std::move(one_hot));
  nodes_[out_v.id].back = [predicted, out_v, target](Tape& t) {
    const double g = t.grad(out_v)[0];
    const Tensor& y2 = t.value(predicted);
    Tensor& gy = t.grad_mut(predicted);
    for (std::size_t j = 0; j < y2.size(); ++j) {
      if ((*target)[j] == 0.0 || y2[j] < kProbFloor) continue;
      gy[j] += g * (-(*target)[j] / y2[j]);
    }
  };
  return out_v;
}

Tape::Value Tape::mse(Value predicted, Tensor target) {
  const Tensor& p = value(predicted);
  const double loss = harkit::mse(p, target);
  Value out_v = emit(Tensor::scalar(loss), nullptr);
  auto tgt = std::make_shared<Tensor>(std::move(target));
  nodes_[out_v.id].back = [predicted, out_v, tgt](Tape& t) {
    const double g = t.grad(out_v)[0];
    const Tensor& p2 = t.value(predicted);
    Tensor& gp = t.grad_mut(predicted);
    const double k = 2.0 / static_cast<double>(p2.size());
    for (std::size_t i = 0; i < p2.size(); ++i) {
      gp[i] += g * k * (p2[i] - (*tgt)[i]);
    }
  };
  return out_v;
}

void Tape::backward(Value root) {
  if (!root.valid() || root.id >= nodes_.size()) {
    throw DimensionError("backward: invalid root");
  }
  if (nodes_[root.id].value.size() != 1) {
    throw DimensionError("backward: root must be scalar, got shape " +
                         nodes_[root.id].value.shape_string());
  }
  nodes_[root.id].grad[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

GradientMap Tape::parameter_gradients() const {
  GradientMap out;
  for (const auto& node : nodes_) {
    if (!node.param_name.empty()) accumulate(out, node.param_name, node.grad);
  }
  return out;
}

Tape::Value recurrent_forward(Tape& tape, Tape::Value seq, const LstmParams& params,
                              Direction direction) {
  switch (direction) {
    case Direction::kForward:
      return tape.lstm(seq, params.w, params.u, params.b, false);
    case Direction::kBackward:
      return tape.lstm(seq, params.w, params.u, params.b, true);
    case Direction::kBidirectional:
      throw ConfigError("recurrent_forward: bidirectional needs two parameter sets");
  }
  throw ConfigError("recurrent_forward: unknown direction");
}

Tape::Value recurrent_forward(Tape& tape, Tape::Value seq, const LstmParams& fwd,
                              const LstmParams& bwd) {
  Tape::Value f = tape.lstm(seq, fwd.w, fwd.u, fwd.b, false);
  Tape::Value b = tape.lstm(seq, bwd.w, bwd.u, bwd.b, true);
  return tape.concat_cols(f, b);
}

}  // namespace harkit
