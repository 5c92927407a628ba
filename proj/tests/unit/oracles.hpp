#pragma once

// Independent statistical oracles for the unit tests.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Asymptotic Kolmogorov-Smirnov p-value for a sample against U[0, 1).
inline double ks_uniform_pvalue(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, (i + 1) / n - xs[i], xs[i] - i / n});
  }
  const double sn = std::sqrt(n);
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) q += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lam * lam);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace oracle
