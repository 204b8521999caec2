#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "protoid/channel.hpp"
#include "protoid/waveform.hpp"

namespace protoid {

enum class PreambleFormat { NonHT, HT, HE, DSSS };

std::string_view to_string(PreambleFormat f);

/// b -> DSSS, g -> NonHT, n -> HT, ax -> HE. With `four_way` off, DSSS is
/// folded into NonHT.
PreambleFormat format_of(ProtocolId p, bool four_way = true);

/// Thresholds on squared normalized metrics, all in [0, 1].
struct DetectorThresholds {
  double dsss = 0.5;    ///< |xcorr|^2 / energies against the long DSSS preamble
  double packet = 0.5;  ///< Schmidl-Cox |P|^2 / R^2 on the L-STF
  double format = 0.5;  ///< |xcorr|^2 / energies against HT or HE training fields
};

struct DetectorConfig {
  DetectorThresholds thresholds;
  bool four_way = true;
  Index autocorr_window = 128;  ///< Schmidl-Cox window, a multiple of 16
};

struct DetectionResult {
  std::optional<PreambleFormat> format;
  double peak_metric = 0.0;  ///< metric of the winning stage
  Index offset = 0;          ///< estimated preamble start
  double dsss_metric = 0.0;
  double packet_metric = 0.0;
  double ht_metric = 0.0;
  double he_metric = 0.0;
};

/// Longest template the detector needs to see (the DSSS preamble).
Index min_detector_input();

/// Peak of |<x[lag:], t>|^2 / (|x[lag:lag+len(t)]|^2 |t|^2) over all lags in
/// [0, len(x) - len(t)]; writes the argmax to `offset` when given.
double normalized_xcorr_peak(const CVector& x, const CVector& t, Index* offset = nullptr);

/// Max over d of the lag-16 Schmidl-Cox metric |P(d)|^2 / R(d)^2.
double autocorrelation_peak(const CVector& x, Index window, Index* offset = nullptr);

/// Three-stage correlation detector: DSSS check, L-STF packet detection,
/// HT/HE disambiguation at the fixed field offsets after the legacy preamble.
/// Among stages that clear their thresholds the highest metric wins, ties go
/// DSSS > HE > HT > NonHT.
DetectionResult detect_format(const ComplexSignal& signal, const DetectorConfig& cfg = {});

/// Metric quantiles over pure-noise inputs so each stage fires on at most
/// `false_alarm` of them.
DetectorThresholds calibrate_thresholds(Index input_len, int trials, double false_alarm, RandomSource& rng);

struct DetectionTrialConfig {
  std::vector<ChannelModel> channels{kAllChannelModels.begin(), kAllChannelModels.end()};
  std::vector<double> snrs_db;
  int trials_per_point = 100;
  Index window_len = 4096;  ///< burst samples handed to the detector
  Index max_lead = 200;     ///< random idle lead-in before the burst
  std::uint64_t seed = 0;
  DetectorConfig detector;
};

struct AccuracyCell {
  ChannelModel channel = ChannelModel::NoChannel;
  double snr_db = 0.0;
  double accuracy = 0.0;
  int trials = 0;
};

/// Fraction of trials whose detected format matches the burst's format, per
/// (channel, SNR). Trials cycle through `bursts` with fresh fading and noise.
std::vector<AccuracyCell> detection_accuracy(const std::vector<LabeledBurst>& bursts,
                                             const DetectionTrialConfig& cfg);

void write_accuracy_csv(const std::filesystem::path& path, const std::vector<AccuracyCell>& cells);

}  // namespace protoid
