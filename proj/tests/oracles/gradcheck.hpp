#pragma once

// Central finite differences for scalar functions of a parameter vector.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

/// dL/dtheta_i ~ (L(theta + h e_i) - L(theta - h e_i)) / 2h. `theta` is
/// restored after every probe.
inline std::vector<double> NumericGradient(std::vector<double> &theta, const std::function<double()> &loss,
                                           double h = 1e-5) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = loss();
    theta[i] = keep - h;
    const double down = loss();
    theta[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double Norm(const std::vector<double> &a) {
  double s = 0.0;
  for (const double v : a) {
    s += v * v;
  }
  return std::sqrt(s);
}

/// ||a - b|| / (||a|| + ||b||); 0 when both vanish.
inline double GradientError(const std::vector<double> &a, const std::vector<double> &b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(na) + std::sqrt(nb);
  return den > 0.0 ? std::sqrt(diff) / den : 0.0;
}

} // namespace oracle
