#pragma once

#include <functional>

#include "harkit/param_store.hpp"
#include "harkit/tape.hpp"

namespace harkit {

// Scalar objective built on a fresh tape from the current parameters.
using TapeObjective = std::function<Tape::Value(Tape&, const ParamStore&)>;

// Compares the tape's analytic parameter gradients against central finite
// differences (step h per coordinate). Returns the max over coordinates of
// |analytic - numeric| / max(1, |numeric|).
double grad_check(const TapeObjective& fn, ParamStore& point, double h = 1e-5);

}  // namespace harkit
