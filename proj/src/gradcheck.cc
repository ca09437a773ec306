#include "g2p/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "g2p/error.h"
#include "g2p/rng.h"

namespace g2p {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<double()>& loss, std::span<GradBlock> blocks,
                           const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw InvalidArgument("grad_check: epsilon must be positive");
  auto eval = [&] {
    const double f = loss();
    if (!std::isfinite(f)) throw NumericError("grad_check: non-finite loss");
    return f;
  };
  eval();

  Lcg64 rng(options.seed);
  GradCheckResult result;
  for (auto& block : blocks) {
    if (block.values.size() != block.analytic.size())
      throw ShapeError("grad_check: block '" + block.name + "' gradient size mismatch");
    std::vector<std::size_t> coords(block.values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.samples_per_block) {
      shuffle(coords, rng);
      coords.resize(options.samples_per_block);
      std::sort(coords.begin(), coords.end());
    }

    BlockError be;
    be.name = block.name;
    for (std::size_t idx : coords) {
      double& theta = block.values[idx];
      const double saved = theta;
      theta = saved + options.epsilon;
      const double up = eval();
      theta = saved - options.epsilon;
      const double down = eval();
      theta = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double err = relative_error(block.analytic[idx], numeric);
      ++be.checked;
      if (err > be.max_rel_error || be.checked == 1) {
        be.max_rel_error = err;
        be.worst_index = idx;
        be.worst_analytic = block.analytic[idx];
        be.worst_numeric = numeric;
      }
    }
    result.max_rel_error = std::max(result.max_rel_error, be.max_rel_error);
    result.blocks.push_back(std::move(be));
  }
  return result;
}

}  // namespace g2p
