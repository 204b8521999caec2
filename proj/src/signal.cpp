#include "protoid/signal.hpp"

#include <cmath>
#include <string>

#include "protoid/error.hpp"

namespace protoid {

ComplexSignal ComplexSignal::segment(Index offset, Index length) const {
  require(offset >= 0 && length >= 0 && offset + length <= size(), ErrorKind::InvalidInput,
          "segment [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
              ") outside signal of length " + std::to_string(size()));
  return ComplexSignal(samples.segment(offset, length), sample_rate_hz);
}

void require_nonempty(const ComplexSignal& signal, const char* operation) {
  require(!signal.empty(), ErrorKind::InvalidInput, std::string(operation) + ": empty signal");
}

bool all_finite(const ComplexSignal& signal) {
  for (Index i = 0; i < signal.size(); ++i) {
    const Complex s = signal.samples[i];
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
  }
  return true;
}

template <typename Scalar>
InterleavedVector<Scalar> interleave_iq(const ComplexSignal& signal) {
  require_nonempty(signal, "interleave_iq");
  const Index n = signal.size();
  InterleavedVector<Scalar> out(2 * n);
  for (Index k = 0; k < n; ++k) {
    out[2 * k] = static_cast<Scalar>(signal.samples[k].real());
    out[2 * k + 1] = static_cast<Scalar>(signal.samples[k].imag());
  }
  return out;
}

template <typename Scalar>
ComplexSignal deinterleave_iq(const Eigen::Ref<const Vector<Scalar>>& values, double sample_rate_hz) {
  require(values.size() % 2 == 0, ErrorKind::InvalidInput, "deinterleave_iq: odd length");
  const Index n = values.size() / 2;
  CVector out(n);
  for (Index k = 0; k < n; ++k) {
    out[k] = Complex(static_cast<double>(values[2 * k]), static_cast<double>(values[2 * k + 1]));
  }
  return ComplexSignal(std::move(out), sample_rate_hz);
}

template InterleavedVector<float> interleave_iq<float>(const ComplexSignal&);
template InterleavedVector<double> interleave_iq<double>(const ComplexSignal&);
template ComplexSignal deinterleave_iq<float>(const Eigen::Ref<const Vector<float>>&, double);
template ComplexSignal deinterleave_iq<double>(const Eigen::Ref<const Vector<double>>&, double);

double mean_power(const ComplexSignal& signal) {
  require_nonempty(signal, "mean_power");
  return signal.samples.squaredNorm() / static_cast<double>(signal.size());
}

ComplexSignal power_normalize(const ComplexSignal& signal, NormalizationMode mode) {
  require_nonempty(signal, "power_normalize");
  double denom = 0.0;
  if (mode == NormalizationMode::Rms) {
    denom = std::sqrt(mean_power(signal));
  } else {
    denom = std::sqrt(signal.samples.cwiseAbs().sum() / static_cast<double>(signal.size()));
  }
  require(denom > 0.0, ErrorKind::DegenerateSignal, "power_normalize: all-zero signal");
  return ComplexSignal(signal.samples / denom, signal.sample_rate_hz);
}

Complex complex_gaussian(RandomSource& rng, double variance) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
  const double re = gauss(rng);
  const double im = gauss(rng);
  return {re, im};
}

ComplexSignal add_awgn(const ComplexSignal& signal, double snr_db, RandomSource& rng) {
  require_nonempty(signal, "add_awgn");
  return add_awgn(signal, snr_db, rng, mean_power(signal));
}

ComplexSignal add_awgn(const ComplexSignal& signal, double snr_db, RandomSource& rng,
                       double reference_power) {
  require_nonempty(signal, "add_awgn");
  if (std::isinf(snr_db) && snr_db > 0) return signal;
  require(reference_power > 0.0, ErrorKind::DegenerateSignal, "add_awgn: zero-power signal");
  const double variance = reference_power / std::pow(10.0, snr_db / 10.0);
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
  ComplexSignal out = signal;
  for (Index k = 0; k < out.size(); ++k) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    out.samples[k] += Complex(re, im);
  }
  return out;
}

}  // namespace protoid
