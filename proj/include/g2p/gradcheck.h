#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace g2p {

// A named, flat view of one parameter block together with its analytic
// gradient.
struct GradBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Coordinates sampled per block; blocks this small or smaller are checked
  // exhaustively.
  std::size_t samples_per_block = 200;
  std::uint64_t seed = 0;
};

struct BlockError {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<BlockError> blocks;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Central differences (f(θ+ε) - f(θ-ε)) / 2ε on sampled coordinates. `loss`
// is evaluated with the block values perturbed in place; every value is
// restored before returning. Throws NumericError if the loss is not finite.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<GradBlock> blocks,
                           const GradCheckOptions& options = {});

}  // namespace g2p
