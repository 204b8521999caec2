#include "protoid/dsp.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <unsupported/Eigen/FFT>

#include "protoid/error.hpp"

namespace protoid {

FirFilter design_lowpass(double cutoff, Index num_taps) {
  require(cutoff > 0.0 && cutoff < 0.5, ErrorKind::InvalidSpec,
          "design_lowpass: cutoff must lie in (0, 0.5), got " + std::to_string(cutoff));
  require(num_taps >= 1 && num_taps % 2 == 1, ErrorKind::InvalidSpec,
          "design_lowpass: num_taps must be odd and positive, got " + std::to_string(num_taps));

  constexpr double pi = std::numbers::pi;
  const Index center = (num_taps - 1) / 2;
  FirFilter f;
  f.coefficients.resize(num_taps);
  for (Index k = 0; k < num_taps; ++k) {
    const double t = static_cast<double>(k - center);
    const double sinc = (k == center) ? 2.0 * cutoff : std::sin(2.0 * pi * cutoff * t) / (pi * t);
    const double window =
        num_taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(k) / (num_taps - 1));
    f.coefficients[k] = sinc * window;
  }
  f.coefficients /= f.coefficients.sum();
  // Force exact symmetry after rounding.
  for (Index k = 0; k < center; ++k) {
    const double avg = 0.5 * (f.coefficients[k] + f.coefficients[num_taps - 1 - k]);
    f.coefficients[k] = f.coefficients[num_taps - 1 - k] = avg;
  }
  return f;
}

ComplexSignal fir_filter(const ComplexSignal& signal, const FirFilter& filter) {
  require_nonempty(signal, "fir_filter");
  const Index n = signal.size();
  const Index taps = filter.size();
  CVector out = CVector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    Complex acc(0.0, 0.0);
    const Index kmax = std::min(taps - 1, i);
    for (Index k = 0; k <= kmax; ++k) acc += filter.coefficients[k] * signal.samples[i - k];
    out[i] = acc;
  }
  return ComplexSignal(std::move(out), signal.sample_rate_hz);
}

FirFilter resampler_filter(Index up, Index down) {
  const Index m = std::max(up, down);
  return design_lowpass(0.5 / static_cast<double>(m), 16 * m + 1);
}

ComplexSignal rational_resample(const ComplexSignal& signal, Index up, Index down) {
  require(up >= 1 && down >= 1, ErrorKind::InvalidSpec,
          "rational_resample: factors must be positive (up=" + std::to_string(up) +
              ", down=" + std::to_string(down) + ")");
  require_nonempty(signal, "rational_resample");
  const Index g = std::gcd(up, down);
  up /= g;
  down /= g;
  const double out_rate = signal.sample_rate_hz * static_cast<double>(up) / static_cast<double>(down);
  if (up == 1 && down == 1) return ComplexSignal(signal.samples, out_rate);

  const FirFilter filter = resampler_filter(up, down);
  const Eigen::VectorXd h = filter.coefficients * static_cast<double>(up);
  const Index taps = h.size();
  const Index delay = filter.group_delay();
  const Index n_in = signal.size();
  const Index n_out = (n_in * up) / down;

  CVector out(n_out);
  for (Index m = 0; m < n_out; ++m) {
    // Position on the upsampled grid, advanced by the group delay so the
    // output is aligned with the input.
    const Index t = m * down + delay;
    // Input samples n contribute through tap k = t - n*up, 0 <= k < taps.
    Index n_hi = t / up;
    Index n_lo = (t - taps + 1 + up - 1) / up;
    if (t - taps + 1 < 0) n_lo = 0;
    n_hi = std::min(n_hi, n_in - 1);
    Complex acc(0.0, 0.0);
    for (Index n = n_lo; n <= n_hi; ++n) acc += h[t - n * up] * signal.samples[n];
    out[m] = acc;
  }
  return ComplexSignal(std::move(out), out_rate);
}

ComplexSignal frequency_shift(const ComplexSignal& signal, double delta_hz) {
  require_nonempty(signal, "frequency_shift");
  require(std::abs(delta_hz) < signal.sample_rate_hz / 2.0, ErrorKind::InvalidSpec,
          "frequency_shift: |" + std::to_string(delta_hz) + "| Hz exceeds Nyquist for fs=" +
              std::to_string(signal.sample_rate_hz));
  if (delta_hz == 0.0) return signal;
  const double step = 2.0 * std::numbers::pi * delta_hz / signal.sample_rate_hz;
  ComplexSignal out = signal;
  for (Index n = 0; n < out.size(); ++n) {
    // fmod keeps the phase argument small for long captures
    const double phase = std::fmod(step * static_cast<double>(n), 2.0 * std::numbers::pi);
    out.samples[n] *= std::polar(1.0, phase);
  }
  return out;
}

CVector fft(const CVector& x) {
  // kissfft crashes on length 1; the transform is the identity there
  if (x.size() <= 1) return x;
  Eigen::FFT<double> engine;
  std::vector<Complex> in(x.data(), x.data() + x.size());
  std::vector<Complex> out;
  engine.fwd(out, in);
  return Eigen::Map<const CVector>(out.data(), static_cast<Index>(out.size()));
}

CVector ifft(const CVector& x) {
  if (x.size() <= 1) return x;
  Eigen::FFT<double> engine;
  std::vector<Complex> in(x.data(), x.data() + x.size());
  std::vector<Complex> out;
  engine.inv(out, in);
  return Eigen::Map<const CVector>(out.data(), static_cast<Index>(out.size()));
}

namespace {

double bin_frequency(Index k, Index n, double fs) {
  const Index shifted = (k >= (n + 1) / 2) ? k - n : k;
  return static_cast<double>(shifted) * fs / static_cast<double>(n);
}

}  // namespace

double peak_frequency(const ComplexSignal& signal) {
  require_nonempty(signal, "peak_frequency");
  const CVector spectrum = fft(signal.samples);
  Index best = 0;
  spectrum.cwiseAbs2().maxCoeff(&best);
  return bin_frequency(best, spectrum.size(), signal.sample_rate_hz);
}

double band_energy_fraction(const ComplexSignal& signal, double half_bandwidth_hz) {
  require_nonempty(signal, "band_energy_fraction");
  const CVector spectrum = fft(signal.samples);
  const Index n = spectrum.size();
  double inside = 0.0;
  double total = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double e = std::norm(spectrum[k]);
    total += e;
    if (std::abs(bin_frequency(k, n, signal.sample_rate_hz)) <= half_bandwidth_hz) inside += e;
  }
  return total > 0.0 ? inside / total : 0.0;
}

}  // namespace protoid
