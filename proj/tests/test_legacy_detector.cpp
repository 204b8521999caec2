#include <doctest.h>

#include "protoid/error.hpp"
#include "protoid/legacy_detector.hpp"
#include "test_util.hpp"

using namespace protoid;
using protoid::testing::random_signal;

namespace {

std::vector<LabeledBurst> clean_bursts(std::uint64_t seed) {
  std::vector<LabeledBurst> out;
  RandomSource rng(seed);
  for (ProtocolId p : kWifiProtocols) out.push_back({generate_burst(BurstSpec::defaults(p), rng), {p}, "sim"});
  return out;
}

}  // namespace

TEST_CASE("a template correlated with itself peaks at 1 at offset 0") {
  for (const CVector& t : {preamble::legacy_stf(), preamble::ht_fields(), preamble::dsss_preamble()}) {
    Index offset = -1;
    CHECK(normalized_xcorr_peak(t, t, &offset) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(offset == 0);
  }
}

TEST_CASE("normalized_xcorr_peak finds an embedded template") {
  RandomSource rng(1);
  CVector x = 0.01 * random_signal(3000, rng).samples;
  const CVector t = preamble::he_fields();
  x.segment(1234, t.size()) += Complex(0.0, 2.0) * t;
  Index offset = 0;
  CHECK(normalized_xcorr_peak(x, t, &offset) > 0.99);
  CHECK(offset == 1234);
}

TEST_CASE("clean bursts are detected with the right format") {
  for (const LabeledBurst& b : clean_bursts(2)) {
    const DetectionResult r = detect_format(b.signal.segment(0, 4096));
    REQUIRE(r.format.has_value());
    CHECK(*r.format == format_of(b.protocols.front()));
  }
}

TEST_CASE("a g burst at 30 dB is non-HT") {
  RandomSource rng(3);
  const ComplexSignal g = generate_burst(BurstSpec::defaults(ProtocolId::G80211), rng);
  const ComplexSignal noisy = add_awgn(g.segment(0, 4096), 30.0, rng);
  const DetectionResult r = detect_format(noisy);
  REQUIRE(r.format.has_value());
  CHECK(*r.format == PreambleFormat::NonHT);
}

TEST_CASE("pure noise raises fewer than 1 percent false alarms") {
  RandomSource rng(4);
  int alarms = 0;
  for (int i = 0; i < 1000; ++i) {
    const ComplexSignal n = random_signal(4296, rng);
    alarms += detect_format(n).format.has_value();
  }
  CHECK(alarms < 10);
}

TEST_CASE("calibrated thresholds hold their false-alarm rate on fresh noise") {
  RandomSource cal(5);
  DetectorConfig cfg;
  cfg.thresholds = calibrate_thresholds(4296, 400, 0.01, cal);
  CHECK(cfg.thresholds.dsss > 0.0);
  CHECK(cfg.thresholds.packet > 0.0);
  CHECK(cfg.thresholds.format > 0.0);
  RandomSource rng(6);
  int alarms = 0;
  for (int i = 0; i < 400; ++i) alarms += detect_format(random_signal(4296, rng), cfg).format.has_value();
  CHECK(alarms <= 20);
}

TEST_CASE("detection is blind to a global phase rotation") {
  RandomSource rng(7);
  for (const LabeledBurst& b : clean_bursts(8)) {
    const ComplexSignal x = add_awgn(b.signal.segment(0, 4096), 10.0, rng);
    ComplexSignal y = x;
    y.samples *= std::polar(1.0, 1.234);
    const DetectionResult rx = detect_format(x), ry = detect_format(y);
    CHECK(rx.format == ry.format);
    CHECK(rx.dsss_metric == doctest::Approx(ry.dsss_metric).epsilon(1e-9));
    CHECK(rx.packet_metric == doctest::Approx(ry.packet_metric).epsilon(1e-9));
  }
}

TEST_CASE("three-way mode folds DSSS into non-HT") {
  CHECK(format_of(ProtocolId::B80211, false) == PreambleFormat::NonHT);
  CHECK(format_of(ProtocolId::B80211, true) == PreambleFormat::DSSS);
  CHECK(format_of(ProtocolId::N80211) == PreambleFormat::HT);
  CHECK(format_of(ProtocolId::AX80211) == PreambleFormat::HE);
}

TEST_CASE("short inputs are rejected") {
  CHECK_THROWS_AS(detect_format(ComplexSignal(CVector::Ones(100), 20e6)), Error);
}

TEST_CASE("detection_accuracy on clean inputs is perfect") {
  DetectionTrialConfig cfg;
  cfg.channels = {ChannelModel::NoChannel};
  cfg.snrs_db = {kNoNoise};
  cfg.trials_per_point = 20;
  const auto cells = detection_accuracy(clean_bursts(9), cfg);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].accuracy == 1.0);
  CHECK(cells[0].trials == 20);
}

TEST_CASE("detection_accuracy defaults to 100 trials and degrades with SNR") {
  DetectionTrialConfig cfg;
  CHECK(cfg.trials_per_point == 100);
  cfg.channels = {ChannelModel::NoChannel, ChannelModel::Rayleigh};
  cfg.snrs_db = {-30, -20, -10, 0, 10, 20, 30};
  cfg.trials_per_point = 100;
  cfg.seed = 10;
  const auto cells = detection_accuracy(clean_bursts(11), cfg);
  REQUIRE(cells.size() == 14);
  for (const AccuracyCell& c : cells) {
    if (c.snr_db == -30.0) CHECK(c.accuracy <= 0.25);
  }
  for (const AccuracyCell& hi : cells) {
    for (const AccuracyCell& lo : cells) {
      if (hi.channel == lo.channel && hi.snr_db >= lo.snr_db + 5.0) CHECK(hi.accuracy >= lo.accuracy - 0.05);
    }
  }
}
