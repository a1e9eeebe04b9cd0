#pragma once

// Scalar Adam written out from the update equations.

#include <cmath>

namespace oracle {

struct ScalarAdam {
  double lr{1e-3};
  double b1{0.9};
  double b2{0.999};
  double eps{1e-8};
  double m{0.0};
  double v{0.0};
  int t{0};

  double Step(double theta, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return theta - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

} // namespace oracle
