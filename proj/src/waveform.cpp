#include "protoid/waveform.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "protoid/dsp.hpp"
#include "protoid/error.hpp"

namespace protoid {

std::string_view to_string(ProtocolId id) {
  switch (id) {
    case ProtocolId::B80211: return "b";
    case ProtocolId::G80211: return "g";
    case ProtocolId::N80211: return "n";
    case ProtocolId::AX80211: return "ax";
    case ProtocolId::Noise: return "noise";
  }
  return "?";
}

ProtocolId parse_protocol(std::string_view name) {
  for (ProtocolId id : kAllProtocols) {
    if (to_string(id) == name) return id;
  }
  if (name == "802.11b") return ProtocolId::B80211;
  if (name == "802.11g") return ProtocolId::G80211;
  if (name == "802.11n") return ProtocolId::N80211;
  if (name == "802.11ax") return ProtocolId::AX80211;
  fail(ErrorKind::InvalidSpec, "unknown protocol '" + std::string(name) + "'");
}

Index default_burst_length(ProtocolId id) {
  switch (id) {
    case ProtocolId::B80211: return 18112;
    case ProtocolId::G80211: return 32960;
    case ProtocolId::N80211: return 31340;
    case ProtocolId::AX80211: return 31640;
    case ProtocolId::Noise: return 8192;
  }
  return 8192;
}

BurstSpec BurstSpec::defaults(ProtocolId id) {
  BurstSpec spec;
  spec.protocol = id;
  spec.target_len_samples = default_burst_length(id);
  switch (id) {
    case ProtocolId::B80211: spec.modulation = Modulation::Qpsk; break;
    case ProtocolId::Noise: spec.modulation = Modulation::Gaussian; break;
    default: spec.modulation = Modulation::Qam16; break;
  }
  return spec;
}

Index BurstSpec::resolved_length() const {
  return target_len_samples > 0 ? target_len_samples : default_burst_length(protocol);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr double kPi = std::numbers::pi;

Index bin(int k, Index n) { return (static_cast<Index>(k) + n) % n; }

/// Time-domain body of one OFDM symbol scaled to unit mean power, given the
/// expected total tone energy of the grid.
CVector ofdm_body(const CVector& grid, double tone_energy) {
  const Index n = grid.size();
  return ifft(grid) * (static_cast<double>(n) / std::sqrt(tone_energy));
}

CVector with_cyclic_prefix(const CVector& body, Index cp) {
  CVector out(body.size() + cp);
  out << body.tail(cp), body;
  return out;
}

CVector periodic_extend(const CVector& body, Index length) {
  CVector out(length);
  for (Index i = 0; i < length; ++i) out[i] = body[i % body.size()];
  return out;
}

CVector concat(const std::vector<CVector>& parts) {
  Index total = 0;
  for (const auto& p : parts) total += p.size();
  CVector out(total);
  Index pos = 0;
  for (const auto& p : parts) {
    out.segment(pos, p.size()) = p;
    pos += p.size();
  }
  return out;
}

// Fixed pseudo-random bit pattern, independent of any caller rng.
std::vector<int> fixed_bits(std::uint64_t seed, std::size_t count) {
  std::vector<int> bits(count);
  std::uint64_t s = seed;
  for (auto& b : bits) {
    s = derive_seed(s, 1);
    b = static_cast<int>(s & 1U);
  }
  return bits;
}

std::vector<int> random_bits(RandomSource& rng, Index count) {
  std::vector<int> bits(static_cast<std::size_t>(count));
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto& b : bits) b = coin(rng);
  return bits;
}

// --- tone plans --------------------------------------------------------------

const std::array<int, 4> kLegacyPilots = {-21, -7, 7, 21};
const std::array<double, 4> kLegacyPilotValues = {1.0, 1.0, 1.0, -1.0};
const std::array<int, 8> kHePilots = {-116, -90, -48, -22, 22, 48, 90, 116};

std::vector<int> data_tones(int lo, int hi, int dc_guard, const int* pilots, std::size_t n_pilots) {
  std::vector<int> tones;
  for (int k = -hi; k <= hi; ++k) {
    if (std::abs(k) < lo || std::abs(k) <= dc_guard) continue;
    bool pilot = false;
    for (std::size_t i = 0; i < n_pilots; ++i) pilot = pilot || pilots[i] == k;
    if (!pilot) tones.push_back(k);
  }
  return tones;
}

const std::vector<int>& legacy_data_tones() {
  static const std::vector<int> t = data_tones(1, 26, 0, kLegacyPilots.data(), kLegacyPilots.size());
  return t;
}
const std::vector<int>& ht_data_tones() {
  static const std::vector<int> t = data_tones(1, 28, 0, kLegacyPilots.data(), kLegacyPilots.size());
  return t;
}
const std::vector<int>& he_data_tones() {
  static const std::vector<int> t = data_tones(2, 122, 1, kHePilots.data(), kHePilots.size());
  return t;
}

Complex qam16(int b0, int b1, int b2, int b3) {
  auto level = [](int hi, int lo) {
    // Gray: 00 -> -3, 01 -> -1, 11 -> 1, 10 -> 3
    if (hi == 0) return lo == 0 ? -3.0 : -1.0;
    return lo == 1 ? 1.0 : 3.0;
  };
  return Complex(level(b0, b1), level(b2, b3)) / std::sqrt(10.0);
}

/// BPSK symbol on the legacy 64-point grid; `rotate` places it on the Q axis.
CVector legacy_bpsk_symbol(const std::vector<int>& coded, bool rotate) {
  const auto& tones = legacy_data_tones();
  CVector grid = CVector::Zero(64);
  const Complex axis = rotate ? Complex(0.0, 1.0) : Complex(1.0, 0.0);
  for (std::size_t i = 0; i < tones.size(); ++i) {
    grid[bin(tones[i], 64)] = axis * (coded[i] ? 1.0 : -1.0);
  }
  for (std::size_t i = 0; i < kLegacyPilots.size(); ++i) {
    grid[bin(kLegacyPilots[i], 64)] = kLegacyPilotValues[i];
  }
  return with_cyclic_prefix(ofdm_body(grid, 52.0), 16);
}

// rate-1/2 repetition stands in for the convolutional code
std::vector<int> repeat2(const std::vector<int>& bits) {
  std::vector<int> out;
  out.reserve(bits.size() * 2);
  for (int b : bits) {
    out.push_back(b);
    out.push_back(b);
  }
  return out;
}

double rate_value(CodingRate r) { return r == CodingRate::Half ? 0.5 : 0.75; }

Index data_symbol_count(Index payload_bits, Index data_tones_per_symbol, CodingRate rate) {
  const double bits_per_symbol = static_cast<double>(data_tones_per_symbol) * 4.0 * rate_value(rate);
  // SERVICE (16) + payload + tail (6)
  return static_cast<Index>(std::ceil(static_cast<double>(16 + payload_bits + 6) / bits_per_symbol));
}

CVector qam_data_symbols(const std::vector<int>& tones, const int* pilots, std::size_t n_pilots,
                         Index fft_size, Index cp, Index n_symbols, RandomSource& rng) {
  std::vector<CVector> symbols;
  symbols.reserve(static_cast<std::size_t>(n_symbols));
  const double energy = static_cast<double>(tones.size() + n_pilots);
  for (Index s = 0; s < n_symbols; ++s) {
    const auto bits = random_bits(rng, static_cast<Index>(tones.size()) * 4);
    CVector grid = CVector::Zero(fft_size);
    for (std::size_t i = 0; i < tones.size(); ++i) {
      grid[bin(tones[i], fft_size)] = qam16(bits[4 * i], bits[4 * i + 1], bits[4 * i + 2], bits[4 * i + 3]);
    }
    for (std::size_t i = 0; i < n_pilots; ++i) {
      grid[bin(pilots[i], fft_size)] = (s % 2 == 0 || i % 2 == 0) ? 1.0 : -1.0;
    }
    symbols.push_back(with_cyclic_prefix(ofdm_body(grid, energy), cp));
  }
  return concat(symbols);
}

int legacy_rate_code(ProtocolId id, CodingRate rate) {
  if (id != ProtocolId::G80211) return 0b1101;  // 6 Mb/s spoofed rate
  return rate == CodingRate::Half ? 0b1001 : 0b1011;
}

// --- 802.11b DSSS ------------------------------------------------------------

class Scrambler {
 public:
  explicit Scrambler(unsigned state) : state_(state & 0x7FU) {}
  int operator()(int bit) {
    const int fb = static_cast<int>(((state_ >> 3) ^ (state_ >> 6)) & 1U);
    const int out = bit ^ fb;
    state_ = ((state_ << 1) | static_cast<unsigned>(out)) & 0x7FU;
    return out;
  }

 private:
  unsigned state_;
};

void append_field_lsb_first(std::vector<int>& bits, std::uint32_t value, int width) {
  for (int i = 0; i < width; ++i) bits.push_back(static_cast<int>((value >> i) & 1U));
}

std::uint16_t crc16_ccitt(const std::vector<int>& bits) {
  std::uint16_t crc = 0xFFFF;
  for (int b : bits) {
    const bool top = (crc & 0x8000U) != 0;
    crc = static_cast<std::uint16_t>(crc << 1);
    if (top != (b != 0)) crc ^= 0x1021;
  }
  return static_cast<std::uint16_t>(~crc);
}

void spread(std::vector<Complex>& chips, Complex symbol) {
  for (double c : preamble::barker11()) chips.push_back(symbol * c);
}

std::vector<int> dsss_preamble_bits() {
  std::vector<int> bits(128, 1);
  append_field_lsb_first(bits, 0xF3A0, 16);
  return bits;
}

/// Whole long-preamble PPDU at 11 Mchip/s: DBPSK preamble and header, DQPSK payload.
CVector dsss_ppdu_chips(Index payload_bits, RandomSource& rng) {
  Scrambler scrambler(0b1101100);
  std::vector<Complex> chips;
  chips.reserve(static_cast<std::size_t>((144 + 48 + payload_bits / 2 + 1) * 11));

  std::vector<int> header;
  append_field_lsb_first(header, 0x14, 8);  // SIGNAL: 2 Mb/s
  append_field_lsb_first(header, 0x00, 8);  // SERVICE
  append_field_lsb_first(header, static_cast<std::uint32_t>(payload_bits / 2), 16);  // LENGTH (us)
  append_field_lsb_first(header, crc16_ccitt(header), 16);

  double phase = 0.0;
  auto dbpsk = [&](int bit) {
    if (scrambler(bit)) phase += kPi;
    spread(chips, std::polar(1.0, phase));
  };
  for (int b : dsss_preamble_bits()) dbpsk(b);
  for (int b : header) dbpsk(b);

  static constexpr std::array<double, 4> kDqpskStep = {0.0, kPi / 2.0, 3.0 * kPi / 2.0, kPi};
  const auto payload = random_bits(rng, payload_bits + (payload_bits % 2));
  for (std::size_t i = 0; i + 1 < payload.size(); i += 2) {
    const int d0 = scrambler(payload[i]);
    const int d1 = scrambler(payload[i + 1]);
    // index d0 d1: 00 -> 0, 01 -> pi/2, 10 -> 3pi/2, 11 -> pi
    phase += kDqpskStep[static_cast<std::size_t>(d0 * 2 + d1)];
    spread(chips, std::polar(1.0, phase));
  }
  return Eigen::Map<const CVector>(chips.data(), static_cast<Index>(chips.size()));
}

CVector ofdm_ppdu(ProtocolId id, Index payload_bits, CodingRate rate, RandomSource& rng) {
  std::vector<CVector> parts;
  parts.push_back(preamble::legacy_stf());
  parts.push_back(preamble::legacy_ltf());
  const CVector lsig = preamble::legacy_sig(legacy_rate_code(id, rate), payload_bits / 8);
  parts.push_back(lsig);

  if (id == ProtocolId::G80211) {
    const auto& tones = legacy_data_tones();
    const Index n = data_symbol_count(payload_bits, static_cast<Index>(tones.size()), rate);
    parts.push_back(qam_data_symbols(tones, kLegacyPilots.data(), kLegacyPilots.size(), 64, 16, n, rng));
  } else if (id == ProtocolId::N80211) {
    parts.push_back(preamble::ht_fields());
    const auto& tones = ht_data_tones();
    const Index n = data_symbol_count(payload_bits, static_cast<Index>(tones.size()), rate);
    parts.push_back(qam_data_symbols(tones, kLegacyPilots.data(), kLegacyPilots.size(), 64, 16, n, rng));
  } else {
    parts.push_back(lsig);  // RL-SIG
    parts.push_back(preamble::he_fields());
    const auto& tones = he_data_tones();
    const Index n = data_symbol_count(payload_bits, static_cast<Index>(tones.size()), rate);
    parts.push_back(qam_data_symbols(tones, kHePilots.data(), kHePilots.size(), 256, 32, n, rng));
  }
  return concat(parts);
}

CodingRate draw_rate(const BurstSpec& spec, RandomSource& rng) {
  if (spec.coding_rate) return *spec.coding_rate;
  std::uniform_int_distribution<int> coin(0, 1);
  return coin(rng) == 0 ? CodingRate::Half : CodingRate::ThreeQuarters;
}

void validate(const BurstSpec& spec) {
  require(spec.payload_bits > 0, ErrorKind::InvalidSpec, "payload_bits must be positive");
  require(spec.ppdus_per_burst >= 0 && spec.idle_samples >= 0 && spec.target_len_samples >= 0,
          ErrorKind::InvalidSpec, "burst counts must be non-negative");
  Modulation expected = Modulation::Qam16;
  if (spec.protocol == ProtocolId::B80211) expected = Modulation::Qpsk;
  if (spec.protocol == ProtocolId::Noise) expected = Modulation::Gaussian;
  require(spec.modulation == expected, ErrorKind::InvalidSpec,
          "unsupported modulation for protocol " + std::string(to_string(spec.protocol)));
}

/// Lays PPDUs out on a timeline of `target` samples at the generator's native rate.
template <typename MakePpdu>
CVector assemble(const BurstSpec& spec, Index target, Index idle, MakePpdu make) {
  std::vector<CVector> parts;
  Index total = 0;
  if (spec.ppdus_per_burst == 0) {
    while (total < target) {
      parts.push_back(make());
      total += parts.back().size();
      parts.push_back(CVector::Zero(idle));
      total += idle;
    }
  } else {
    std::vector<CVector> ppdus;
    Index active = 0;
    for (Index i = 0; i < spec.ppdus_per_burst; ++i) {
      ppdus.push_back(make());
      active += ppdus.back().size();
    }
    const Index gap = std::max(idle, (target - active) / spec.ppdus_per_burst);
    for (auto& p : ppdus) {
      parts.push_back(std::move(p));
      parts.push_back(CVector::Zero(gap));
    }
  }
  CVector out = concat(parts);
  CVector fitted = CVector::Zero(target);
  const Index keep = std::min(target, out.size());
  fitted.head(keep) = out.head(keep);
  return fitted;
}

}  // namespace

// --- preamble builders ---------------------------------------------------------

namespace preamble {

const std::array<double, 11>& barker11() {
  static const std::array<double, 11> b = {1, -1, 1, 1, -1, 1, 1, 1, -1, -1, -1};
  return b;
}

CVector legacy_stf() {
  static const CVector stf = [] {
    // nonzero tones at multiples of 4, values sqrt(13/6) * (+-1 +- j)
    const std::array<int, 12> tones = {-24, -20, -16, -12, -8, -4, 4, 8, 12, 16, 20, 24};
    const std::array<double, 12> signs = {1, -1, 1, -1, -1, 1, -1, -1, 1, 1, 1, 1};
    CVector grid = CVector::Zero(64);
    const double a = std::sqrt(13.0 / 6.0);
    for (std::size_t i = 0; i < tones.size(); ++i) grid[bin(tones[i], 64)] = a * signs[i] * Complex(1, 1);
    return periodic_extend(ofdm_body(grid, 52.0), 160);
  }();
  return stf;
}

namespace {
const std::array<double, 53>& ltf_sequence() {
  static const std::array<double, 53> l = {
      1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0,
      1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1};
  return l;
}

CVector ltf_body(bool high_throughput) {
  CVector grid = CVector::Zero(64);
  const auto& l = ltf_sequence();
  for (int k = -26; k <= 26; ++k) grid[bin(k, 64)] = l[static_cast<std::size_t>(k + 26)];
  double energy = 52.0;
  if (high_throughput) {
    grid[bin(-28, 64)] = 1.0;
    grid[bin(-27, 64)] = 1.0;
    grid[bin(27, 64)] = -1.0;
    grid[bin(28, 64)] = -1.0;
    energy = 56.0;
  }
  return ofdm_body(grid, energy);
}
}  // namespace

CVector legacy_ltf() {
  static const CVector ltf = [] {
    const CVector body = ltf_body(false);
    CVector out(160);
    out << body.tail(32), body, body;
    return out;
  }();
  return ltf;
}

CVector legacy_sig(int rate_code, Index length_octets) {
  std::vector<int> bits;
  for (int i = 3; i >= 0; --i) bits.push_back((rate_code >> i) & 1);
  bits.push_back(0);
  append_field_lsb_first(bits, static_cast<std::uint32_t>(length_octets & 0xFFF), 12);
  bits.push_back(std::accumulate(bits.begin(), bits.end(), 0) % 2);
  for (int i = 0; i < 6; ++i) bits.push_back(0);
  return legacy_bpsk_symbol(repeat2(bits), false);
}

CVector ht_fields() {
  static const CVector fields = [] {
    std::vector<CVector> parts;
    const auto sig_bits = fixed_bits(0x4854, 48);  // HT-SIG1/2 contents
    for (int s = 0; s < 2; ++s) {
      std::vector<int> half(sig_bits.begin() + 24 * s, sig_bits.begin() + 24 * (s + 1));
      parts.push_back(legacy_bpsk_symbol(repeat2(half), true));
    }
    parts.push_back(legacy_stf().head(80));
    parts.push_back(with_cyclic_prefix(ltf_body(true), 16));
    return concat(parts);
  }();
  return fields;
}

CVector he_fields() {
  static const CVector fields = [] {
    std::vector<CVector> parts;
    const auto sig_bits = fixed_bits(0x4845, 48);  // HE-SIG-A1/2 contents
    for (int s = 0; s < 2; ++s) {
      std::vector<int> half(sig_bits.begin() + 24 * s, sig_bits.begin() + 24 * (s + 1));
      parts.push_back(legacy_bpsk_symbol(repeat2(half), false));
    }
    // HE-STF: every 16th tone of the 256-point grid, 0.8 us period
    CVector stf_grid = CVector::Zero(256);
    const auto stf_signs = fixed_bits(0x5354, 14);
    int idx = 0;
    for (int k = -112; k <= 112; k += 16) {
      if (k == 0) continue;
      stf_grid[bin(k, 256)] = (stf_signs[static_cast<std::size_t>(idx++)] ? 1.0 : -1.0) * Complex(1, 1) /
                              std::sqrt(2.0);
    }
    parts.push_back(periodic_extend(ofdm_body(stf_grid, 14.0), 80));
    // 4x HE-LTF: 242 tones, 3.2 us guard
    CVector ltf_grid = CVector::Zero(256);
    const auto ltf_signs = fixed_bits(0x4C54, 245);
    Index used = 0;
    for (int k = -122; k <= 122; ++k) {
      if (std::abs(k) < 2) continue;
      ltf_grid[bin(k, 256)] = ltf_signs[static_cast<std::size_t>(k + 122)] ? 1.0 : -1.0;
      ++used;
    }
    parts.push_back(with_cyclic_prefix(ofdm_body(ltf_grid, static_cast<double>(used)), 64));
    return concat(parts);
  }();
  return fields;
}

CVector dsss_preamble_chips() {
  static const CVector chips = [] {
    Scrambler scrambler(0b1101100);
    std::vector<Complex> out;
    double phase = 0.0;
    for (int b : dsss_preamble_bits()) {
      if (scrambler(b)) phase += kPi;
      spread(out, std::polar(1.0, phase));
    }
    return CVector(Eigen::Map<const CVector>(out.data(), static_cast<Index>(out.size())));
  }();
  return chips;
}

CVector dsss_preamble() {
  static const CVector samples =
      rational_resample(ComplexSignal(dsss_preamble_chips(), kDsssChipRate), 20, 11).samples;
  return samples;
}

}  // namespace preamble

// --- bursts --------------------------------------------------------------------

CVector generate_ppdu(ProtocolId id, Index payload_bits, CodingRate rate, RandomSource& rng) {
  require(payload_bits > 0, ErrorKind::InvalidSpec, "payload_bits must be positive");
  switch (id) {
    case ProtocolId::B80211: {
      const ComplexSignal chips(dsss_ppdu_chips(payload_bits, rng), preamble::kDsssChipRate);
      return rational_resample(chips, 20, 11).samples;
    }
    case ProtocolId::G80211:
    case ProtocolId::N80211:
    case ProtocolId::AX80211:
      return ofdm_ppdu(id, payload_bits, rate, rng);
    case ProtocolId::Noise:
      break;
  }
  fail(ErrorKind::InvalidSpec, "noise has no PPDU structure");
}

ComplexSignal generate_burst(const BurstSpec& spec, RandomSource& rng) {
  validate(spec);
  const Index target = spec.resolved_length();
  require(target > 0, ErrorKind::InvalidSpec, "burst length must be positive");

  CVector samples;
  if (spec.protocol == ProtocolId::Noise) {
    samples.resize(target);
    for (Index i = 0; i < target; ++i) samples[i] = complex_gaussian(rng, 1.0);
  } else if (spec.protocol == ProtocolId::B80211) {
    // Lay out the burst at the chip rate, then upsample 11 -> 20 MHz in one pass.
    const Index target_chips = (target * 11 + 19) / 20 + 32;
    const Index idle_chips = (spec.idle_samples * 11 + 10) / 20;
    const CVector chips = assemble(spec, target_chips, idle_chips,
                                   [&] { return dsss_ppdu_chips(spec.payload_bits, rng); });
    samples = rational_resample(ComplexSignal(chips, preamble::kDsssChipRate), 20, 11).samples.head(target);
  } else {
    samples = assemble(spec, target, spec.idle_samples, [&] {
      return ofdm_ppdu(spec.protocol, spec.payload_bits, draw_rate(spec, rng), rng);
    });
  }
  return power_normalize(ComplexSignal(std::move(samples), 20e6), NormalizationMode::Rms);
}

// --- overlap -------------------------------------------------------------------

std::pair<ProtocolId, ProtocolId> overlap_pair(OverlapCase c) {
  using P = ProtocolId;
  switch (c) {
    case OverlapCase::C1: return {P::G80211, P::N80211};
    case OverlapCase::C2: return {P::B80211, P::AX80211};
    case OverlapCase::C3: return {P::B80211, P::G80211};
    case OverlapCase::C4: return {P::B80211, P::N80211};
    case OverlapCase::C5: return {P::G80211, P::AX80211};
    case OverlapCase::C6: return {P::N80211, P::AX80211};
  }
  return {P::G80211, P::N80211};
}

double spectral_overlap(double f1_hz, double f2_hz, double bandwidth_hz) {
  return std::max(0.0, (bandwidth_hz - std::abs(f2_hz - f1_hz)) / bandwidth_hz);
}

OverlapSpec OverlapSpec::from_table(OverlapCase c, ReceiverLayout layout, double ratio) {
  require(std::abs(ratio - 0.25) < 1e-9 || std::abs(ratio - 0.5) < 1e-9, ErrorKind::InvalidSpec,
          "overlap ratio must be 0.25 or 0.5");
  OverlapSpec spec;
  std::tie(spec.incumbent, spec.interferer) = overlap_pair(c);
  spec.overlap_ratio = ratio;
  spec.tx1_center_hz = 2.442e9;
  spec.tx2_center_hz = ratio < 0.4 ? 2.457e9 : 2.452e9;
  if (layout == ReceiverLayout::O1) {
    spec.rx_sample_rate_hz = 20e6;
    spec.rx_center_hz = 2.442e9;
    spec.capture_len_samples = 198080;
  } else {
    spec.rx_sample_rate_hz = 62.5e6;
    spec.rx_center_hz = 2.45e9;
    spec.capture_len_samples = 309500;
  }
  return spec;
}

namespace {

constexpr double kChannelBandwidth = 20e6;

/// Rational approximation p/q of a rate ratio (rates here are multiples of 0.5 MHz).
std::pair<Index, Index> rate_ratio(double to_hz, double from_hz) {
  const auto to = static_cast<Index>(std::llround(to_hz / 0.5e6));
  const auto from = static_cast<Index>(std::llround(from_hz / 0.5e6));
  const Index g = std::gcd(to, from);
  return {to / g, from / g};
}

/// One transmitter's contribution at the receiver rate.
ComplexSignal place_transmitter(const ComplexSignal& burst, double offset_hz, double rx_rate,
                                Index oversample) {
  const double work_rate = rx_rate * static_cast<double>(oversample);
  const auto [up, down] = rate_ratio(work_rate, burst.sample_rate_hz);
  ComplexSignal x = rational_resample(burst, up, down);
  x.sample_rate_hz = work_rate;
  x = frequency_shift(x, offset_hz);
  if (oversample > 1) {
    x = rational_resample(x, 1, oversample);
    x.sample_rate_hz = rx_rate;
  }
  return x;
}

}  // namespace

ComplexSignal generate_overlapping_capture(const OverlapSpec& spec, RandomSource& rng) {
  require(spec.rx_sample_rate_hz > 0 && spec.capture_len_samples > 0, ErrorKind::InvalidSpec,
          "overlap capture needs a positive rate and length");
  require(spec.interferer_power >= 0.0, ErrorKind::InvalidSpec, "interferer power must be >= 0");
  require(std::abs(spectral_overlap(spec.tx1_center_hz, spec.tx2_center_hz) - spec.overlap_ratio) < 1e-6,
          ErrorKind::InvalidSpec, "overlap ratio inconsistent with transmitter frequencies");
  const double half_band = spec.rx_sample_rate_hz / 2.0;
  const double off1 = spec.tx1_center_hz - spec.rx_center_hz;
  const double off2 = spec.tx2_center_hz - spec.rx_center_hz;
  for (double off : {off1, off2}) {
    // a transmitter whose channel does not intersect the receiver band at all
    require(std::abs(off) < half_band + kChannelBandwidth / 2.0, ErrorKind::InvalidSpec,
            "transmitter at offset " + std::to_string(off) + " Hz is outside the receiver band");
  }

  // Work at an integer multiple of the receiver rate wide enough to hold both
  // shifted channels, then band-limit back down to the receiver rate.
  const double needed = std::max(std::abs(off1), std::abs(off2)) + kChannelBandwidth / 2.0;
  Index oversample = 1;
  while (static_cast<double>(oversample) * half_band <= needed) ++oversample;

  const auto burst_len = static_cast<Index>(
      std::ceil(static_cast<double>(spec.capture_len_samples) * 20e6 / spec.rx_sample_rate_hz)) + 64;
  BurstSpec inc = BurstSpec::defaults(spec.incumbent);
  inc.target_len_samples = burst_len;
  BurstSpec itf = BurstSpec::defaults(spec.interferer);
  itf.target_len_samples = burst_len;

  const ComplexSignal a = generate_burst(inc, rng);
  const ComplexSignal b = generate_burst(itf, rng);
  ComplexSignal out = place_transmitter(a, off1, spec.rx_sample_rate_hz, oversample);
  if (spec.interferer_power > 0.0) {
    const ComplexSignal y = place_transmitter(b, off2, spec.rx_sample_rate_hz, oversample);
    const Index n = std::min(out.size(), y.size());
    out.samples.head(n) += std::sqrt(spec.interferer_power) * y.samples.head(n);
  }
  require(out.size() >= spec.capture_len_samples, ErrorKind::InvalidSpec, "capture shorter than requested");
  out.samples.conservativeResize(spec.capture_len_samples);
  return out;
}

}  // namespace protoid
