#pragma once

#include <array>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "protoid/signal.hpp"

namespace protoid {

enum class ChannelModel { NoChannel, Rayleigh, TGnB, TGaxB };

inline constexpr std::array<ChannelModel, 4> kAllChannelModels = {
    ChannelModel::NoChannel, ChannelModel::Rayleigh, ChannelModel::TGnB, ChannelModel::TGaxB};

std::string_view to_string(ChannelModel model);
ChannelModel parse_channel_model(std::string_view name);

struct Tap {
  double delay_s = 0.0;
  Complex gain{1.0, 0.0};
};

struct FadingRealization {
  std::vector<Tap> taps;  ///< sorted by delay
  ChannelModel source_model = ChannelModel::NoChannel;
  std::uint64_t seed = 0;

  static FadingRealization identity();
};

/// Average path gain of the single Rayleigh tap, 10^(-3/10).
inline constexpr double kRayleighPathGain = 0.50118723362727224;
inline constexpr double kRayleighDelay = 1.5e-9;

/// Model-B style 9-tap profile: delays (s) and linear powers normalized to unit sum.
const std::vector<std::pair<double, double>>& model_b_profile();

/// One block-fading draw. NoChannel yields the identity realization.
FadingRealization draw_realization(ChannelModel model, RandomSource& rng);

/// Tapped delay line with delays rounded to the nearest sample; output is
/// truncated to the input length.
ComplexSignal apply_channel(const ComplexSignal& signal, const FadingRealization& realization);

struct ChannelCondition {
  ChannelModel model = ChannelModel::NoChannel;
  double snr_db = kNoNoise;
};

/// Uniform over `models`, SNR uniform on [snr_min_db, snr_max_db].
ChannelCondition sample_random_condition(RandomSource& rng,
                                         std::span<const ChannelModel> models = kAllChannelModels,
                                         double snr_min_db = -30.0, double snr_max_db = 30.0);

}  // namespace protoid
