#include <doctest.h>

#include "protoid/dsp.hpp"
#include "protoid/error.hpp"
#include "protoid/legacy_detector.hpp"
#include "protoid/waveform.hpp"
#include "test_util.hpp"

using namespace protoid;

namespace {

ComplexSignal clean_burst(ProtocolId p, std::uint64_t seed) {
  RandomSource rng(seed);
  return generate_burst(BurstSpec::defaults(p), rng);
}

}  // namespace

TEST_CASE("default burst lengths") {
  CHECK(clean_burst(ProtocolId::B80211, 1).size() == 18112);
  CHECK(clean_burst(ProtocolId::G80211, 1).size() == 32960);
  CHECK(clean_burst(ProtocolId::N80211, 1).size() == default_burst_length(ProtocolId::N80211));
  CHECK(clean_burst(ProtocolId::AX80211, 1).size() == default_burst_length(ProtocolId::AX80211));
}

TEST_CASE("noise bursts are unit-power Gaussian") {
  BurstSpec spec = BurstSpec::defaults(ProtocolId::Noise);
  spec.target_len_samples = 4096;
  RandomSource rng(2);
  const ComplexSignal s = generate_burst(spec, rng);
  CHECK(s.size() == 4096);
  CHECK(mean_power(s) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("bursts have unit power and finite samples") {
  for (ProtocolId p : kWifiProtocols) {
    const ComplexSignal s = clean_burst(p, 3);
    CHECK(all_finite(s));
    CHECK(mean_power(s) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.sample_rate_hz == 20e6);
  }
}

TEST_CASE("generation is deterministic per seed") {
  for (ProtocolId p : kWifiProtocols) {
    CHECK(clean_burst(p, 4).samples == clean_burst(p, 4).samples);
    CHECK(clean_burst(p, 4).samples != clean_burst(p, 5).samples);
  }
}

TEST_CASE("spectral occupancy matches the nominal bandwidth") {
  for (ProtocolId p : {ProtocolId::G80211, ProtocolId::N80211, ProtocolId::AX80211}) {
    CAPTURE(to_string(p));
    CHECK(band_energy_fraction(clean_burst(p, 6), 10e6) >= 0.9);
    // OFDM subcarriers stop at about 8.4 MHz
    CHECK(band_energy_fraction(clean_burst(p, 6), 9e6) >= 0.9);
  }
  CHECK(band_energy_fraction(clean_burst(ProtocolId::B80211, 6), 5.5e6) >= 0.9);
}

TEST_CASE("preamble regions are pairwise distinguishable") {
  const Index region = 1040;
  std::vector<ComplexSignal> bursts;
  for (ProtocolId p : kWifiProtocols) bursts.push_back(clean_burst(p, 7));
  for (std::size_t a = 0; a < bursts.size(); ++a) {
    const CVector templ = bursts[a].samples.head(region);
    const double self = normalized_xcorr_peak(bursts[a].samples.head(2 * region), templ);
    CHECK(self == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t b = 0; b < bursts.size(); ++b) {
      if (a == b) continue;
      const double cross = normalized_xcorr_peak(bursts[b].samples.head(2 * region), templ);
      CAPTURE(a);
      CAPTURE(b);
      CHECK(cross < 0.9 * self);
    }
  }
}

TEST_CASE("protocol names round trip") {
  for (ProtocolId p : kAllProtocols) CHECK(parse_protocol(to_string(p)) == p);
  CHECK_THROWS_AS(parse_protocol("802.11zz"), Error);
}

TEST_CASE("legacy preamble field lengths") {
  CHECK(preamble::legacy_stf().size() == 160);
  CHECK(preamble::legacy_ltf().size() == 160);
  CHECK(preamble::ht_fields().size() == 320);
  CHECK(preamble::he_fields().size() == 560);
  // the L-STF repeats every 16 samples
  const CVector stf = preamble::legacy_stf();
  CHECK((stf.segment(16, 144) - stf.head(144)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("OFDM bursts start with the legacy preamble") {
  for (ProtocolId p : {ProtocolId::G80211, ProtocolId::N80211, ProtocolId::AX80211}) {
    const ComplexSignal s = clean_burst(p, 8);
    CVector ref(320);
    ref << preamble::legacy_stf(), preamble::legacy_ltf();
    const CVector head = s.samples.head(320);
    const Complex scale = head.dot(ref) / ref.squaredNorm();
    CHECK((head - ref * std::conj(scale)).norm() < 1e-9 * head.norm());
  }
}

TEST_CASE("overlap reference layout O2 at 25 percent") {
  const OverlapSpec s = OverlapSpec::from_table(OverlapCase::C1, ReceiverLayout::O2, 0.25);
  CHECK(s.rx_center_hz == doctest::Approx(2.45e9));
  CHECK(s.tx1_center_hz == doctest::Approx(2.442e9));
  CHECK(s.tx2_center_hz == doctest::Approx(2.457e9));
  CHECK(s.rx_sample_rate_hz == doctest::Approx(62.5e6));
  CHECK(s.capture_len_samples == 309500);
}

TEST_CASE("spectral overlap of two 20 MHz channels") {
  CHECK(spectral_overlap(2.442e9, 2.452e9) == doctest::Approx(0.5));
  CHECK(spectral_overlap(2.442e9, 2.457e9) == doctest::Approx(0.25));
  CHECK(spectral_overlap(2.442e9, 2.472e9) == 0.0);
  for (ReceiverLayout l : {ReceiverLayout::O1, ReceiverLayout::O2}) {
    for (double r : {0.25, 0.5}) {
      const OverlapSpec s = OverlapSpec::from_table(OverlapCase::C3, l, r);
      CHECK(spectral_overlap(s.tx1_center_hz, s.tx2_center_hz) == doctest::Approx(r));
    }
  }
}

TEST_CASE("overlap capture length and measured overlap") {
  OverlapSpec s = OverlapSpec::from_table(OverlapCase::C5, ReceiverLayout::O2, 0.5);
  s.capture_len_samples = 40000;
  RandomSource rng(9);
  const ComplexSignal c = generate_overlapping_capture(s, rng);
  CHECK(c.size() == 40000);
  CHECK(c.sample_rate_hz == doctest::Approx(62.5e6));
  // each transmitter's energy sits in its own 20 MHz channel
  const double off1 = s.tx1_center_hz - s.rx_center_hz;
  const double off2 = s.tx2_center_hz - s.rx_center_hz;
  const double lo = std::min(off1, off2) - 10e6, hi = std::max(off1, off2) + 10e6;
  const ComplexSignal centered = frequency_shift(c, -(lo + hi) / 2.0);
  CHECK(band_energy_fraction(centered, (hi - lo) / 2.0) >= 0.9);
}

TEST_CASE("incumbent-only capture ignores the interferer") {
  OverlapSpec s = OverlapSpec::from_table(OverlapCase::C1, ReceiverLayout::O1, 0.25);
  s.capture_len_samples = 20000;
  s.interferer_power = 0.0;
  RandomSource a(10);
  const ComplexSignal only = generate_overlapping_capture(s, a);
  OverlapSpec other = s;
  other.interferer = ProtocolId::AX80211;
  RandomSource b(10);
  CHECK(generate_overlapping_capture(other, b).samples == only.samples);
  const ComplexSignal centered = frequency_shift(only, -(s.tx1_center_hz - s.rx_center_hz));
  CHECK(band_energy_fraction(centered, 10e6) >= 0.95);
}

TEST_CASE("inconsistent overlap specs are rejected") {
  OverlapSpec s;
  s.overlap_ratio = 0.5;  // frequencies give 0.25
  RandomSource rng(11);
  CHECK_THROWS_AS(generate_overlapping_capture(s, rng), Error);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}
