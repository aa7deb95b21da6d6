#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "harkit/errors.hpp"
#include "harkit/rng.hpp"
#include "harkit/tensor.hpp"

namespace harkit {

// Named parameter arrays plus the seed they were initialized from.
// Registration order is fixed by the builder, so re-initializing with the
// same seed reproduces every value bit-for-bit.
class ParamStore {
public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed), rng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  Tensor& add_uniform(const std::string& name, std::vector<std::size_t> shape,
                      std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.values()) v = rng_.uniform(-bound, bound);
    return insert(name, std::move(t));
  }

  Tensor& add_constant(const std::string& name, std::vector<std::size_t> shape,
                       double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return insert(name, std::move(t));
  }

  Tensor& insert(const std::string& name, Tensor t) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(t)});
    return entries_.back().value;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return entries_[it->second].value;
  }

  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return entries_[it->second].value;
  }

  // Registration order.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& e : entries_) {
      if (!e.value.all_finite()) return false;
    }
    return true;
  }

private:
  struct Entry {
    std::string name;
    Tensor value;
  };

  std::uint64_t seed_;
  Rng rng_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Gradient arrays keyed by parameter name, matching each parameter's shape.
using GradientMap = std::map<std::string, Tensor>;

inline void accumulate(GradientMap& into, const std::string& name, const Tensor& g) {
  auto it = into.find(name);
  if (it == into.end()) {
    into.emplace(name, g);
    return;
  }
  if (!it->second.same_shape(g)) {
    throw DimensionError("gradient shape mismatch for " + name);
  }
  double* dst = it->second.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

}  // namespace harkit
