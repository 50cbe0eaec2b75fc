#pragma once

#include <random>

#include "hsflow/rational_map.hpp"

namespace hsflow::sampling {

/// Random locally univalent g with m <= 4 zeros and n <= 2 total pole order,
/// m >= n, rotated so that a_1 > 0.
inline RationalDerivative random_map(std::mt19937_64& rng, int max_m = 4, int max_n = 2,
                                     bool allow_double_pole = true) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> zr(1.3, 3.5);
  std::uniform_real_distribution<double> pr(1.6, 4.0);
  std::uniform_int_distribution<int> mdist(0, max_m);
  const int m = mdist(rng);
  std::uniform_int_distribution<int> ndist(0, std::min(m, max_n));
  const int n = ndist(rng);
  std::vector<Complex> zeros;
  auto far_enough = [&](Complex z) {
    for (Complex w : zeros)
      if (std::abs(w - z) < 0.3) return false;
    return true;
  };
  while (static_cast<int>(zeros.size()) < m) {
    const Complex z = std::polar(zr(rng), ang(rng));
    if (far_enough(z)) zeros.push_back(z);
  }
  std::vector<PoleEntry> poles;
  if (n == 2 && allow_double_pole && std::bernoulli_distribution(0.5)(rng)) {
    poles.push_back({std::polar(pr(rng), ang(rng)), 2});
  } else {
    while (static_cast<int>(poles.size()) < n) {
      const Complex z = std::polar(pr(rng), ang(rng));
      bool ok = true;
      for (const auto& p : poles) ok = ok && std::abs(p.z - z) > 0.3;
      for (Complex w : zeros) ok = ok && std::abs(w - z) > 0.3;
      if (ok) poles.push_back({z, 1});
    }
  }
  std::uniform_real_distribution<double> bs(0.5, 2.0);
  return RationalDerivative(std::polar(bs(rng), ang(rng)), zeros, poles).normalized();
}

}  // namespace hsflow::sampling
