#pragma once

#include <cmath>
#include <numbers>

#include "protoid/signal.hpp"

namespace protoid::testing {

inline ComplexSignal random_signal(Index n, RandomSource& rng, double rate = 20e6) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector s(n);
  for (Index i = 0; i < n; ++i) s[i] = Complex(g(rng), g(rng));
  return ComplexSignal(s, rate);
}

inline ComplexSignal tone(Index n, double freq_hz, double rate) {
  CVector s(n);
  for (Index i = 0; i < n; ++i) s[i] = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate);
  return ComplexSignal(s, rate);
}

/// O(N^2) DFT used as an independent reference.
inline CVector naive_dft(const CVector& x) {
  const Index n = x.size();
  CVector out = CVector::Zero(n);
  for (Index k = 0; k < n; ++k) {
    for (Index t = 0; t < n; ++t) {
      out[k] += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    }
  }
  return out;
}

/// Magnitude of the DFT at `freq_hz`, by direct projection.
inline double tone_magnitude(const ComplexSignal& s, double freq_hz) {
  Complex acc(0.0, 0.0);
  for (Index i = 0; i < s.size(); ++i) {
    acc += s.samples[i] * std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / s.sample_rate_hz);
  }
  return std::abs(acc);
}

}  // namespace protoid::testing
