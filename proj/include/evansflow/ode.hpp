// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>

#include "evansflow/types.hpp"

namespace evansflow::ode {

struct Options {
  Real abs_tol = 1e-12;
  Real rel_tol = 1e-12;
  Real h_init = 0.0;  // 0: choose from the interval length
  Real h_min = 1e-14;
  long max_steps = 20'000'000;
};

// Embedded Dormand-Prince 5(4) pair with standard step-size control.
// State is any Eigen vector/matrix type (real or complex).
template <class State, class Rhs>
void integrate(Rhs&& rhs, State& y, Real x0, Real x1, const Options& opt = {}) {
  static constexpr Real c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr Real a21 = 1.0 / 5;
  static constexpr Real a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr Real a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr Real a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr Real a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
  static constexpr Real b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr Real e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (x0 == x1) return;
  const Real dir = (x1 > x0) ? 1.0 : -1.0;
  const Real span = std::abs(x1 - x0);
  Real h = opt.h_init > 0 ? opt.h_init : std::min(span, 1e-2 * span + 1e-6);
  h *= dir;
  Real x = x0;

  State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y;
  rhs(y, k1, x);  // FSAL: k1 always holds f(y, x)

  for (long step = 0; step < opt.max_steps; ++step) {
    if ((x - x1) * dir >= 0) return;
    if (std::abs(h) > std::abs(x1 - x)) h = x1 - x;

    ytmp = y + h * (a21 * k1);
    rhs(ytmp, k2, x + c2 * h);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(ytmp, k3, x + c3 * h);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(ytmp, k4, x + c4 * h);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(ytmp, k5, x + c5 * h);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(ytmp, k6, x + h);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(ynew, k7, x + h);

    // scaled max-norm of the embedded error estimate
    State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    Real enorm = 0.0;
    for (int j = 0; j < err.size(); ++j) {
      const Real sc =
          opt.abs_tol + opt.rel_tol * std::max(std::abs(y(j)), std::abs(ynew(j)));
      enorm = std::max(enorm, std::abs(err(j)) / sc);
    }

    if (enorm <= 1.0) {
      x += h;
      y.swap(ynew);
      k1.swap(k7);
      const Real fac = enorm == 0.0 ? 5.0 : 0.9 * std::pow(enorm, -0.2);
      h *= std::min(5.0, std::max(0.2, fac));
    } else {
      h *= std::max(0.2, 0.9 * std::pow(enorm, -0.2));
    }
    if (std::abs(h) < opt.h_min)
      throw Error("ode: step size underflow at x = " + std::to_string(x));
  }
  throw Error("ode: step budget exhausted");
}

// Classical fixed-step RK4, for smooth parameter transport problems.
template <class State, class Rhs>
void rk4(Rhs&& rhs, State& y, Real x0, Real x1, int steps) {
  const Real h = (x1 - x0) / steps;
  State k1 = y, k2 = y, k3 = y, k4 = y, ytmp = y;
  Real x = x0;
  for (int i = 0; i < steps; ++i) {
    rhs(y, k1, x);
    ytmp = y + (0.5 * h) * k1;
    rhs(ytmp, k2, x + 0.5 * h);
    ytmp = y + (0.5 * h) * k2;
    rhs(ytmp, k3, x + 0.5 * h);
    ytmp = y + h * k3;
    rhs(ytmp, k4, x + h);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    x += h;
  }
}

}  // namespace evansflow::ode
