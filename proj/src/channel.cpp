#include "protoid/channel.hpp"

#include <cmath>
#include <string>

#include "protoid/error.hpp"

namespace protoid {

std::string_view to_string(ChannelModel model) {
  switch (model) {
    case ChannelModel::NoChannel: return "none";
    case ChannelModel::Rayleigh: return "rayleigh";
    case ChannelModel::TGnB: return "tgn";
    case ChannelModel::TGaxB: return "tgax";
  }
  return "?";
}

ChannelModel parse_channel_model(std::string_view name) {
  for (ChannelModel m : kAllChannelModels) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorKind::InvalidSpec, "unknown channel model '" + std::string(name) + "'");
}

FadingRealization FadingRealization::identity() {
  FadingRealization r;
  r.taps = {Tap{0.0, Complex(1.0, 0.0)}};
  return r;
}

const std::vector<std::pair<double, double>>& model_b_profile() {
  static const std::vector<std::pair<double, double>> profile = [] {
    const std::array<double, 9> power_db = {-5.4, -2.4, -10.7, -11.5, -7.4, -7.1, -10.3, -12.7, -16.3};
    std::vector<std::pair<double, double>> p;
    double total = 0.0;
    for (std::size_t i = 0; i < power_db.size(); ++i) {
      const double lin = std::pow(10.0, power_db[i] / 10.0);
      p.emplace_back(10e-9 * static_cast<double>(i), lin);
      total += lin;
    }
    for (auto& [delay, power] : p) power /= total;
    return p;
  }();
  return profile;
}

FadingRealization draw_realization(ChannelModel model, RandomSource& rng) {
  if (model == ChannelModel::NoChannel) return FadingRealization::identity();
  FadingRealization r;
  r.source_model = model;
  r.seed = rng();
  RandomSource local(r.seed);
  if (model == ChannelModel::Rayleigh) {
    r.taps.push_back(Tap{kRayleighDelay, complex_gaussian(local, kRayleighPathGain)});
  } else {
    for (const auto& [delay, power] : model_b_profile()) {
      r.taps.push_back(Tap{delay, complex_gaussian(local, power)});
    }
  }
  return r;
}

ComplexSignal apply_channel(const ComplexSignal& signal, const FadingRealization& realization) {
  require_nonempty(signal, "apply_channel");
  const Index n = signal.size();
  ComplexSignal out(CVector::Zero(n), signal.sample_rate_hz);
  for (const Tap& tap : realization.taps) {
    const auto shift = static_cast<Index>(std::llround(tap.delay_s * signal.sample_rate_hz));
    if (shift >= n) continue;
    out.samples.tail(n - shift) += tap.gain * signal.samples.head(n - shift);
  }
  return out;
}

ChannelCondition sample_random_condition(RandomSource& rng, std::span<const ChannelModel> models,
                                         double snr_min_db, double snr_max_db) {
  require(!models.empty(), ErrorKind::InvalidSpec, "no channel models to sample from");
  require(snr_min_db <= snr_max_db, ErrorKind::InvalidSpec, "empty SNR range");
  std::uniform_int_distribution<std::size_t> pick(0, models.size() - 1);
  std::uniform_real_distribution<double> snr(snr_min_db, snr_max_db);
  ChannelCondition c;
  c.model = models[pick(rng)];
  c.snr_db = snr(rng);
  return c;
}

}  // namespace protoid
