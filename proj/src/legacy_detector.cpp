#include "protoid/legacy_detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "protoid/dsp.hpp"
#include "protoid/error.hpp"

namespace protoid {

std::string_view to_string(PreambleFormat f) {
  switch (f) {
    case PreambleFormat::NonHT: return "nonht";
    case PreambleFormat::HT: return "ht";
    case PreambleFormat::HE: return "he";
    case PreambleFormat::DSSS: return "dsss";
  }
  return "?";
}

PreambleFormat format_of(ProtocolId p, bool four_way) {
  switch (p) {
    case ProtocolId::B80211: return four_way ? PreambleFormat::DSSS : PreambleFormat::NonHT;
    case ProtocolId::G80211: return PreambleFormat::NonHT;
    case ProtocolId::N80211: return PreambleFormat::HT;
    case ProtocolId::AX80211: return PreambleFormat::HE;
    case ProtocolId::Noise: break;
  }
  fail(ErrorKind::InvalidLabel, "noise has no preamble format");
}

namespace {

struct Templates {
  CVector dsss;
  CVector legacy;
  CVector ht;
  CVector he;
};

const Templates& templates() {
  static const Templates t = [] {
    Templates out;
    out.dsss = preamble::dsss_preamble();
    out.legacy.resize(preamble::kLegacyPreambleLen);
    out.legacy << preamble::legacy_stf(), preamble::legacy_ltf();
    out.ht = preamble::ht_fields();
    out.he = preamble::he_fields();
    return out;
  }();
  return t;
}

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Squared normalized correlation of x[at, at + len(t)) with t; 0 if out of range.
double correlation_at(const CVector& x, const CVector& t, Index at) {
  if (at < 0 || at + t.size() > x.size()) return 0.0;
  const auto seg = x.segment(at, t.size());
  const double e = seg.squaredNorm() * t.squaredNorm();
  if (e <= 0.0) return 0.0;
  return std::norm(t.dot(seg)) / e;
}

/// Best correlation_at within +-slack of `at`.
double correlation_near(const CVector& x, const CVector& t, Index at, Index slack) {
  double best = 0.0;
  for (Index d = -slack; d <= slack; ++d) best = std::max(best, correlation_at(x, t, at + d));
  return best;
}

}  // namespace

Index min_detector_input() { return templates().dsss.size(); }

double normalized_xcorr_peak(const CVector& x, const CVector& t, Index* offset) {
  require(t.size() > 0, ErrorKind::InvalidInput, "empty template");
  require(x.size() >= t.size(), ErrorKind::InsufficientSamples,
          "signal of " + std::to_string(x.size()) + " samples shorter than template of " +
              std::to_string(t.size()));
  const Index n = next_pow2(x.size());
  CVector xp = CVector::Zero(n);
  CVector tp = CVector::Zero(n);
  xp.head(x.size()) = x;
  tp.head(t.size()) = t;
  const CVector c = ifft((fft(xp).array() * fft(tp).array().conjugate()).matrix());

  Vector<double> prefix(x.size() + 1);
  prefix[0] = 0.0;
  for (Index i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + std::norm(x[i]);
  const double te = t.squaredNorm();
  double best = 0.0;
  Index best_lag = 0;
  for (Index lag = 0; lag + t.size() <= x.size(); ++lag) {
    const double e = (prefix[lag + t.size()] - prefix[lag]) * te;
    if (e <= 0.0) continue;
    const double m = std::min(1.0, std::norm(c[lag]) / e);
    if (m > best) {
      best = m;
      best_lag = lag;
    }
  }
  if (offset != nullptr) *offset = best_lag;
  return best;
}

double autocorrelation_peak(const CVector& x, Index window, Index* offset) {
  constexpr Index kLag = 16;
  require(window > 0, ErrorKind::InvalidSpec, "autocorrelation window must be positive");
  require(x.size() >= window + kLag, ErrorKind::InsufficientSamples, "signal shorter than autocorrelation span");
  Complex p(0.0, 0.0);
  double r = 0.0;
  for (Index m = 0; m < window; ++m) {
    p += std::conj(x[m]) * x[m + kLag];
    r += std::norm(x[m + kLag]);
  }
  double best = 0.0;
  Index best_d = 0;
  for (Index d = 0;; ++d) {
    if (r > 0.0) {
      const double metric = std::min(1.0, std::norm(p) / (r * r));
      if (metric > best) {
        best = metric;
        best_d = d;
      }
    }
    if (d + window + kLag >= x.size()) break;
    p += std::conj(x[d + window]) * x[d + window + kLag] - std::conj(x[d]) * x[d + kLag];
    r += std::norm(x[d + window + kLag]) - std::norm(x[d + kLag]);
  }
  if (offset != nullptr) *offset = best_d;
  return best;
}

DetectionResult detect_format(const ComplexSignal& signal, const DetectorConfig& cfg) {
  const Templates& t = templates();
  require(signal.size() >= min_detector_input(), ErrorKind::InsufficientSamples,
          "detector needs " + std::to_string(min_detector_input()) + " samples, have " +
              std::to_string(signal.size()));
  require(cfg.autocorr_window > 0 && cfg.autocorr_window % 16 == 0, ErrorKind::InvalidSpec,
          "autocorrelation window must be a positive multiple of 16");
  const CVector& x = signal.samples;
  DetectionResult r;

  Index dsss_at = 0;
  r.dsss_metric = normalized_xcorr_peak(x, t.dsss, &dsss_at);
  r.packet_metric = autocorrelation_peak(x, cfg.autocorr_window);

  // Fine timing on the legacy preamble, restricted so the HE fields still fit.
  const Index span = preamble::kHeFieldsOffset + t.he.size();
  Index t0 = 0;
  normalized_xcorr_peak(x.head(x.size() - span + t.legacy.size()), t.legacy, &t0);
  constexpr Index kSlack = 2;
  r.ht_metric = correlation_near(x, t.ht, t0 + preamble::kHtFieldsOffset, kSlack);
  r.he_metric = correlation_near(x, t.he, t0 + preamble::kHeFieldsOffset, kSlack);

  const DetectorThresholds& th = cfg.thresholds;
  const bool ofdm = r.packet_metric >= th.packet;
  const bool dsss = r.dsss_metric >= th.dsss;
  if (dsss && (!ofdm || r.dsss_metric >= r.packet_metric)) {
    r.format = cfg.four_way ? PreambleFormat::DSSS : PreambleFormat::NonHT;
    r.peak_metric = r.dsss_metric;
    r.offset = dsss_at;
  } else if (ofdm) {
    r.offset = t0;
    if (std::max(r.he_metric, r.ht_metric) >= th.format) {
      r.format = r.he_metric >= r.ht_metric ? PreambleFormat::HE : PreambleFormat::HT;
      r.peak_metric = r.packet_metric;
    } else {
      r.format = PreambleFormat::NonHT;
      r.peak_metric = r.packet_metric;
    }
  } else {
    r.peak_metric = std::max(r.dsss_metric, r.packet_metric);
    r.offset = r.dsss_metric >= r.packet_metric ? dsss_at : t0;
  }
  return r;
}

DetectorThresholds calibrate_thresholds(Index input_len, int trials, double false_alarm, RandomSource& rng) {
  require(trials > 0, ErrorKind::InvalidSpec, "need at least one trial");
  require(false_alarm > 0.0 && false_alarm < 1.0, ErrorKind::InvalidSpec, "false alarm rate must be in (0, 1)");
  require(input_len >= min_detector_input(), ErrorKind::InsufficientSamples, "calibration input too short");
  std::vector<double> dsss, packet, format;
  DetectorConfig open;
  for (int i = 0; i < trials; ++i) {
    ComplexSignal noise(CVector(input_len), 20e6);
    for (Index k = 0; k < input_len; ++k) noise.samples[k] = complex_gaussian(rng, 1.0);
    const DetectionResult r = detect_format(noise, open);
    dsss.push_back(r.dsss_metric);
    packet.push_back(r.packet_metric);
    format.push_back(std::max(r.ht_metric, r.he_metric));
  }
  auto quantile = [&](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const auto k = static_cast<std::size_t>(std::ceil((1.0 - false_alarm) * static_cast<double>(v.size())));
    return v[std::min(k, v.size() - 1)];
  };
  return DetectorThresholds{quantile(dsss), quantile(packet), quantile(format)};
}

std::vector<AccuracyCell> detection_accuracy(const std::vector<LabeledBurst>& bursts,
                                             const DetectionTrialConfig& cfg) {
  require(!bursts.empty(), ErrorKind::InvalidInput, "no bursts to evaluate");
  require(!cfg.channels.empty() && !cfg.snrs_db.empty(), ErrorKind::InvalidSpec, "empty channel or SNR grid");
  require(cfg.trials_per_point > 0, ErrorKind::InvalidSpec, "trials_per_point must be positive");
  require(cfg.window_len >= min_detector_input(), ErrorKind::InvalidSpec, "window shorter than DSSS preamble");
  for (const LabeledBurst& b : bursts) {
    require(b.signal.size() >= cfg.window_len, ErrorKind::InsufficientSamples, "burst shorter than window");
    require(b.protocols.size() == 1, ErrorKind::InvalidLabel, "legacy detection needs single-protocol bursts");
  }
  std::vector<AccuracyCell> cells;
  std::uint64_t stream = 0;
  for (ChannelModel ch : cfg.channels) {
    for (double snr : cfg.snrs_db) {
      RandomSource rng(derive_seed(cfg.seed, stream++));
      std::uniform_int_distribution<Index> lead_dist(0, std::max<Index>(0, cfg.max_lead));
      int correct = 0;
      for (int trial = 0; trial < cfg.trials_per_point; ++trial) {
        const LabeledBurst& b = bursts[static_cast<std::size_t>(trial) % bursts.size()];
        const Index lead = lead_dist(rng);
        ComplexSignal x(CVector::Zero(lead + cfg.window_len), b.signal.sample_rate_hz);
        x.samples.tail(cfg.window_len) = b.signal.samples.head(cfg.window_len);
        const ComplexSignal faded = apply_channel(x, draw_realization(ch, rng));
        const double ref = mean_power(faded.segment(lead, cfg.window_len));
        const ComplexSignal noisy = add_awgn(faded, snr, rng, ref > 0.0 ? ref : 1.0);
        const DetectionResult r = detect_format(noisy, cfg.detector);
        correct += r.format.has_value() && *r.format == format_of(b.protocols.front(), cfg.detector.four_way);
      }
      cells.push_back(AccuracyCell{ch, snr, static_cast<double>(correct) / cfg.trials_per_point,
                                   cfg.trials_per_point});
    }
  }
  return cells;
}

void write_accuracy_csv(const std::filesystem::path& path, const std::vector<AccuracyCell>& cells) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << "channel,snr_db,accuracy,trials\n";
  for (const AccuracyCell& c : cells) {
    out << to_string(c.channel) << ',' << c.snr_db << ',' << c.accuracy << ',' << c.trials << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace protoid
