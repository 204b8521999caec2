#pragma once

#include <Eigen/Core>

#include "protoid/signal.hpp"

namespace protoid {

/// Odd-length, symmetric (linear-phase) real FIR.
struct FirFilter {
  Eigen::VectorXd coefficients;

  Index size() const { return coefficients.size(); }
  Index group_delay() const { return (coefficients.size() - 1) / 2; }
  double dc_gain() const { return coefficients.sum(); }
};

/// Hamming-windowed sinc low-pass. `cutoff` is in cycles/sample, (0, 0.5).
FirFilter design_lowpass(double cutoff, Index num_taps);

/// Causal convolution, output length equals input length.
ComplexSignal fir_filter(const ComplexSignal& signal, const FirFilter& filter);

/// Anti-alias filter used by rational_resample for the reduced factors.
FirFilter resampler_filter(Index up, Index down);

/// Polyphase rational resampler.
///
/// Output length is floor(len * up / down) and the output is time-aligned with
/// the input: the filter's group delay is removed, and samples past the end of
/// the input are treated as zero.
ComplexSignal rational_resample(const ComplexSignal& signal, Index up, Index down);

/// Multiplies by exp(j 2 pi delta n / fs). Requires |delta| < fs / 2.
ComplexSignal frequency_shift(const ComplexSignal& signal, double delta_hz);

/// Forward DFT (unnormalized), backed by Eigen's FFT module.
CVector fft(const CVector& x);
/// Inverse DFT including the 1/N factor.
CVector ifft(const CVector& x);

/// Frequency in Hz of the strongest DFT bin, mapped to [-fs/2, fs/2).
double peak_frequency(const ComplexSignal& signal);

/// Fraction of total spectral energy within |f| <= half_bandwidth_hz.
double band_energy_fraction(const ComplexSignal& signal, double half_bandwidth_hz);

}  // namespace protoid
