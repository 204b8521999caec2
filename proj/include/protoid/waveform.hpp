#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protoid/signal.hpp"

namespace protoid {

enum class ProtocolId { B80211, G80211, N80211, AX80211, Noise };

inline constexpr std::array<ProtocolId, 4> kWifiProtocols = {
    ProtocolId::B80211, ProtocolId::G80211, ProtocolId::N80211, ProtocolId::AX80211};
inline constexpr std::array<ProtocolId, 5> kAllProtocols = {
    ProtocolId::B80211, ProtocolId::G80211, ProtocolId::N80211, ProtocolId::AX80211,
    ProtocolId::Noise};

/// Short names used in files and on the command line: b, g, n, ax, noise.
std::string_view to_string(ProtocolId id);
ProtocolId parse_protocol(std::string_view name);

/// Class index in the classifier output: b=0, g=1, n=2, ax=3, noise=4.
inline int class_index(ProtocolId id) { return static_cast<int>(id); }
inline ProtocolId protocol_from_class(int index) { return static_cast<ProtocolId>(index); }

/// Burst length at 20 MHz per protocol (18112 / 32960 / 31340 / 31640).
Index default_burst_length(ProtocolId id);

enum class Modulation { Qpsk, Qam16, Gaussian };
enum class CodingRate { Half, ThreeQuarters };

struct BurstSpec {
  ProtocolId protocol = ProtocolId::G80211;
  Index payload_bits = 1000;
  /// 0 packs PPDUs back to back (separated by idle_samples) until the target
  /// length is filled; a positive count spreads exactly that many PPDUs over it.
  Index ppdus_per_burst = 0;
  Index target_len_samples = 0;  ///< 0 selects default_burst_length(protocol)
  Modulation modulation = Modulation::Qam16;
  /// Unset draws the rate per PPDU.
  std::optional<CodingRate> coding_rate;
  Index idle_samples = 80;

  static BurstSpec defaults(ProtocolId id);
  Index resolved_length() const;
};

/// 20 MHz baseband burst with unit mean power and exactly resolved_length() samples.
ComplexSignal generate_burst(const BurstSpec& spec, RandomSource& rng);

/// One capture with its ground-truth protocol set.
struct LabeledBurst {
  ComplexSignal signal;
  std::vector<ProtocolId> protocols;
  std::string scenario;
};

/// One PPDU at 20 MHz (no idle time, not power normalized).
CVector generate_ppdu(ProtocolId id, Index payload_bits, CodingRate rate, RandomSource& rng);

/// Fixed preamble fields shared by the generators and the legacy detector.
namespace preamble {

inline constexpr double kDsssChipRate = 11e6;
inline constexpr Index kLegacyPreambleLen = 320;  ///< L-STF + L-LTF
inline constexpr Index kLegacySigEnd = 400;       ///< end of L-SIG
inline constexpr Index kHtFieldsOffset = 400;     ///< HT-SIG starts right after L-SIG
inline constexpr Index kHeFieldsOffset = 480;     ///< HE-SIG-A follows L-SIG and RL-SIG

CVector legacy_stf();  ///< 160 samples, ten 16-sample repetitions
CVector legacy_ltf();  ///< 160 samples, 32-sample guard + two 64-sample symbols
CVector legacy_sig(int rate_code, Index length_octets);

/// HT-SIG (QBPSK) + HT-STF + HT-LTF, 320 samples.
CVector ht_fields();
/// HE-SIG-A + HE-STF + 4x HE-LTF, 560 samples.
CVector he_fields();

/// Barker-11 sequence.
const std::array<double, 11>& barker11();
/// SYNC (128 scrambled ones) + SFD, spread by Barker-11, at 11 Mchip/s.
CVector dsss_preamble_chips();
/// dsss_preamble_chips() resampled to 20 MHz.
CVector dsss_preamble();

}  // namespace preamble

// ---------------------------------------------------------------------------
// Overlapping two-transmitter captures

enum class OverlapCase { C1, C2, C3, C4, C5, C6 };
enum class ReceiverLayout { O1, O2 };

inline constexpr std::array<OverlapCase, 6> kOverlapCases = {
    OverlapCase::C1, OverlapCase::C2, OverlapCase::C3,
    OverlapCase::C4, OverlapCase::C5, OverlapCase::C6};

/// (incumbent, interferer) for each configuration.
std::pair<ProtocolId, ProtocolId> overlap_pair(OverlapCase c);

struct OverlapSpec {
  ProtocolId incumbent = ProtocolId::G80211;
  ProtocolId interferer = ProtocolId::N80211;
  double overlap_ratio = 0.25;
  double rx_sample_rate_hz = 20e6;
  double rx_center_hz = 2.442e9;
  double tx1_center_hz = 2.442e9;
  double tx2_center_hz = 2.457e9;
  Index capture_len_samples = 198080;
  /// Linear power of the interferer relative to the incumbent (0 dB default).
  double interferer_power = 1.0;

  /// Frequency plan of the reference receiver layouts for R in {0.25, 0.5}.
  static OverlapSpec from_table(OverlapCase c, ReceiverLayout layout, double ratio);
};

/// Spectral overlap of two channels of `bandwidth_hz`: (bw - |f2 - f1|) / bw, clamped at 0.
double spectral_overlap(double f1_hz, double f2_hz, double bandwidth_hz = 20e6);

ComplexSignal generate_overlapping_capture(const OverlapSpec& spec, RandomSource& rng);

/// Deterministic per-stream seed derivation (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace protoid
