#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ihnn/core/error.hpp"

namespace ihnn {

/// Where the first fixed-point iterate of an implicit step comes from.
enum class GuessSource {
  predictor,       // explicit RK2 estimate
  observation,     // caller-supplied hint, typically the next noisy observation
  previous_state,  // y_n itself
};

inline GuessSource parse_guess_source(std::string_view name) {
  if (name == "predictor") return GuessSource::predictor;
  if (name == "observation") return GuessSource::observation;
  if (name == "previous_state") return GuessSource::previous_state;
  throw ConfigError("unknown guess source '" + std::string(name) + "'");
}

inline std::string to_string(GuessSource g) {
  switch (g) {
    case GuessSource::predictor: return "predictor";
    case GuessSource::observation: return "observation";
    case GuessSource::previous_state: return "previous_state";
  }
  return "?";
}

/// Fixed-point iteration settings.
///
/// With `early_exit` the iteration stops as soon as the infinity norm of the
/// change between successive iterates is <= tol; otherwise it always runs
/// `max_iters` sweeps. Contraction needs h * L < 2, L a bound on the Hessian norm.
struct FpiConfig {
  int max_iters = 50;
  double tol = 1e-10;
  GuessSource guess = GuessSource::predictor;
  bool early_exit = true;
  bool record_history = false;  // keep every iterate difference in the report

  void validate() const {
    if (max_iters < 1) throw ConfigError("fixed-point max_iters must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("fixed-point tol must be > 0");
  }
};

struct StepReport {
  int iterations_used = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

}  // namespace ihnn
