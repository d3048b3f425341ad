#pragma once

#include <random>

#include "foodchain/equilibria.hpp"
#include "foodchain/model.hpp"

namespace fctest {

using foodchain::Params;

// Kinetics of the stripes-spots example (also the sign-study set).
inline Params base_set(double m = 0.01) {
  Params p;
  p.w1 = 0.96;
  p.w2 = 0.52;
  p.w3 = 1.06;
  p.w4 = 0.37;
  p.a2 = 0.014;
  p.c = 0.1;
  p.D3 = 0.1;
  p.m = m;
  p.d1 = 1e-3;
  p.d2 = 1e-5;
  p.d3 = 1e-5;
  return p;
}

// Stripe-pattern example.
inline Params stripe_set(double m = 0.1) {
  Params p = base_set(m);
  p.w1 = 0.95;
  p.w2 = 0.3;
  p.w3 = 0.82;
  p.w4 = 0.53;
  p.a2 = 0.01;
  return p;
}

// Random kinetic parameters for which an interior equilibrium exists.
inline Params random_with_e8(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (;;) {
    Params p;
    p.w1 = 0.3 + 0.69 * U(rng);
    p.w2 = 0.1 + 1.5 * U(rng);
    p.w3 = 0.1 + 2.0 * U(rng);
    p.w4 = 0.1 + 1.0 * U(rng);
    p.a2 = 0.005 + 0.3 * U(rng);
    p.c = 0.05 + 0.5 * U(rng);
    p.D3 = 0.05 + 0.5 * U(rng);
    p.m = 0.3 * U(rng);
    p.d1 = 1e-3 * (0.1 + U(rng));
    p.d2 = 1e-4 * (0.1 + U(rng));
    p.d3 = 1e-4 * (0.1 + U(rng));
    if (foodchain::interior_equilibrium(p).exists) return p;
  }
}

}  // namespace fctest
