#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Core>

namespace protoid {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-worker random stream. Never shared between threads.
using RandomSource = std::mt19937_64;

/// Interleaved real layout [I0, Q0, I1, Q1, ...].
template <typename Scalar = double>
using InterleavedVector = Vector<Scalar>;

struct ComplexSignal {
  CVector samples;
  double sample_rate_hz = 20e6;

  ComplexSignal() = default;
  ComplexSignal(CVector s, double rate) : samples(std::move(s)), sample_rate_hz(rate) {}

  Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }

  /// Copy of samples [offset, offset + length).
  ComplexSignal segment(Index offset, Index length) const;
};

/// SNR sentinel meaning "no noise added".
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

enum class NormalizationMode {
  Rms,        ///< divide by sqrt(mean |s|^2); output has unit mean power
  AsPrinted,  ///< divide by sqrt(mean |s|), the typeset variant
};

void require_nonempty(const ComplexSignal& signal, const char* operation);
bool all_finite(const ComplexSignal& signal);

template <typename Scalar = double>
InterleavedVector<Scalar> interleave_iq(const ComplexSignal& signal);

template <typename Scalar>
ComplexSignal deinterleave_iq(const Eigen::Ref<const Vector<Scalar>>& values, double sample_rate_hz);

double mean_power(const ComplexSignal& signal);

ComplexSignal power_normalize(const ComplexSignal& signal,
                              NormalizationMode mode = NormalizationMode::Rms);

/// Circularly-symmetric complex AWGN at `snr_db` relative to the signal's own
/// mean power. `snr_db == kNoNoise` returns the input unchanged.
ComplexSignal add_awgn(const ComplexSignal& signal, double snr_db, RandomSource& rng);

/// Same, with the noise variance referenced to an externally measured power
/// (e.g. the whole burst when only a window is being corrupted).
ComplexSignal add_awgn(const ComplexSignal& signal, double snr_db, RandomSource& rng,
                       double reference_power);

/// Draws CN(0, variance): variance/2 on each rail.
Complex complex_gaussian(RandomSource& rng, double variance);

}  // namespace protoid
