#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "riser/nets.hpp"

namespace riser::testing {

/// Central finite differences over every tensor in `params` against an
/// arbitrary scalar loss; fills max relative error over probed entries.
/// Probes all entries when probe_per_tensor <= 0.
inline double max_grad_rel_error(const std::vector<Tensor*>& params,
                                 const std::function<double()>& loss,
                                 const std::function<void()>& backward,
                                 Rng& rng, int probe_per_tensor = 25,
                                 double h = 1e-5) {
  for (Tensor* p : params) p->grad.setZero();
  backward();
  double worst = 0.0;
  for (Tensor* p : params) {
    const Eigen::Index n = p->value.size();
    const int probes = probe_per_tensor <= 0
                           ? static_cast<int>(n)
                           : std::min<int>(probe_per_tensor, int(n));
    for (int k = 0; k < probes; ++k) {
      const Eigen::Index i =
          probe_per_tensor <= 0 ? k : rng.uniform_int(0, n - 1);
      double* x = p->value.data() + i;
      const double saved = *x;
      *x = saved + h;
      const double up = loss();
      *x = saved - h;
      const double down = loss();
      *x = saved;
      const double fd = (up - down) / (2 * h);
      const double an = p->grad.data()[i];
      const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, std::abs(fd - an) / scale);
    }
  }
  return worst;
}

}  // namespace riser::testing
