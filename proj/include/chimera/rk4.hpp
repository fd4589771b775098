#pragma once

#include <concepts>

namespace chimera {

/// Any state that forms a vector space under + and scalar *.
template <class S>
concept VectorSpace = requires(S a, S b, double h) {
  { a + b } -> std::convertible_to<S>;
  { h * a } -> std::convertible_to<S>;
};

/// One classic fourth-order Runge-Kutta step of y' = f(t, y).
template <VectorSpace State, class Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
  const double h2 = 0.5 * h;
  const State k1 = f(t, y);
  const State k2 = f(t + h2, State(y + h2 * k1));
  const State k3 = f(t + h2, State(y + h2 * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return State(y + (h / 6.0) * State(k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace chimera
