#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0.0;  // worst instance
  double tolerance = 0.0;
  int instances = 0;
  std::size_t checked = 0;     // coordinates compared
  std::size_t skipped = 0;     // coordinates straddling a kink or clamp
  bool pass() const { return max_rel_error < tolerance; }
};

struct FiniteDifferenceOptions {
  double step = 1e-6;
  /// A coordinate is treated as lying on a kink when its one-sided
  /// differences disagree by more than this fraction of their magnitude.
  double kink_ratio = 1e-3;
  double kink_floor = 1e-8;
};

struct FiniteDifferenceStats {
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Compares `analytic` against central differences of `f` at `x` over the
/// listed coordinates (all when empty). `x` is perturbed in place and
/// restored.
FiniteDifferenceStats compare_with_finite_differences(const std::function<double()>& f, std::vector<double>& x,
                                                      const std::vector<double>& analytic,
                                                      const std::vector<std::size_t>& coords = {},
                                                      const FiniteDifferenceOptions& options = {});

/// Seeded finite-difference suites for warp_backward, every loss term,
/// total_loss and the network backward pass.
std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed, int instances = 20, bool include_network = true);

}  // namespace monostereo
