#pragma once

#include <stdexcept>
#include <string>

namespace drglm {

/// Structural problems in input data (ragged CSV, bad types, missing cells).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Formula syntax or design-matrix construction failures.
struct FormulaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model fitting failures: rank deficiency, divergence, inadmissible means.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Positivity violations and other weighting problems.
struct WeightError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inference-stage failures (too many bootstrap refits failing, singular vcov).
struct InferenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace drglm
