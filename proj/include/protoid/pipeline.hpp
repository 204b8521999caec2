#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "protoid/channel.hpp"
#include "protoid/network.hpp"
#include "protoid/tokenizer.hpp"
#include "protoid/waveform.hpp"

namespace protoid {

inline constexpr Index kChunkSamples = 12900;
inline constexpr double kReceiverRate = 31.25e6;
inline constexpr Index kModelSamples = 8192;
/// 31.25 MHz -> 20 MHz.
inline constexpr Index kResampleUp = 16;
inline constexpr Index kResampleDown = 25;

using Clock = std::chrono::steady_clock;

/// One receiver buffer: kChunkSamples int16 I/Q pairs, interleaved.
struct BufferChunk {
  std::vector<std::int16_t> iq;
  std::uint64_t sequence = 0;
  Clock::time_point received{};
};

struct ProcessedChunk {
  InterleavedVector<float> values;  ///< kModelSamples interleaved samples at 20 MHz in [-1, 1]
  std::uint64_t sequence = 0;
  Clock::time_point received{};
  Clock::time_point processed{};
};

struct PredictionRecord {
  std::uint64_t sequence = 0;
  int label = 0;
  std::vector<float> log_scores;
  Clock::time_point received{};
  Clock::time_point processed{};
  Clock::time_point predicted{};
};

/// Produces interleaved int16 buffers of kChunkSamples at kReceiverRate.
class ChunkSource {
 public:
  virtual ~ChunkSource() = default;
  /// Empty when exhausted.
  virtual std::optional<std::vector<std::int16_t>> next() = 0;
};

/// Slices a precomputed 31.25 MHz int16 recording, optionally looping. A
/// trailing partial buffer is discarded.
class LoopSource final : public ChunkSource {
 public:
  LoopSource(std::vector<std::int16_t> interleaved, bool loop);
  std::optional<std::vector<std::int16_t>> next() override;
  Index chunks_per_pass() const;

 private:
  std::vector<std::int16_t> data_;
  bool loop_;
  std::size_t cursor_ = 0;
};

/// Scales to a 0.9 full-scale peak and rounds to int16.
std::vector<std::int16_t> quantize_int16(const ComplexSignal& signal);

/// Rational resampling between rates on a 1 kHz grid.
ComplexSignal resample_to(const ComplexSignal& signal, double target_rate_hz);

/// Generated bursts of `protocols` (round robin) through `channel` at `snr_db`,
/// lifted to 31.25 MHz and quantized.
std::unique_ptr<ChunkSource> make_synthetic_source(const std::vector<ProtocolId>& protocols, double snr_db,
                                                   ChannelModel channel, int bursts_per_protocol,
                                                   std::uint64_t seed, bool loop = true);

/// Captures played back in order at 31.25 MHz.
std::unique_ptr<ChunkSource> make_file_source(const std::vector<std::filesystem::path>& captures, bool loop = true);

/// Stage 2: scale to [-1, 1], resample 16/25, keep the first kModelSamples, interleave.
InterleavedVector<float> process_chunk(const std::vector<std::int16_t>& iq);

struct Inference {
  int label = 0;
  std::vector<float> log_scores;
};

/// Stage 3: deinterleave, RMS-normalize the first M*S samples, tokenize, forward, argmax.
Inference infer(const InterleavedVector<float>& values, const Network<float>& net, const TokenizationConfig& tok);

struct QueueConfig {
  std::size_t q1_capacity = 2;
  std::size_t q2_capacity = 2;
};

/// Extra time spent by a stage on item `sequence`.
using StageDelay = std::function<std::chrono::nanoseconds(std::uint64_t sequence)>;

struct PipelineConfig {
  QueueConfig queues;
  /// Receiver period is pacing * (kChunkSamples / kReceiverRate); 0 runs free.
  double pacing = 1.0;
  std::optional<std::chrono::nanoseconds> duration;
  std::optional<std::uint64_t> max_chunks;
  StageDelay receiver_delay;
  StageDelay dsp_delay;
  StageDelay inference_delay;
  /// Finish queued work on shutdown; otherwise leftovers count as in flight.
  bool drain_on_shutdown = true;
  /// Called from the inference thread for each record.
  std::function<void(const PredictionRecord&)> on_prediction;
};

struct StageStats {
  double mean_ms = 0.0;
  double max_ms = 0.0;
  double stddev_ms = 0.0;
  Index count = 0;
};

struct StageTimings {
  StageStats receiver;
  StageStats dsp;
  StageStats inference;
  StageStats end_to_end;
  double predictions_per_second = 0.0;
  std::uint64_t drops_q1 = 0;
  std::uint64_t drops_q2 = 0;
};

struct PipelineReport {
  std::vector<PredictionRecord> predictions;
  std::uint64_t chunks_in = 0;
  std::uint64_t drops_q1 = 0;
  std::uint64_t drops_q2 = 0;
  std::uint64_t in_flight = 0;  ///< left in queues at shutdown
  std::size_t max_occupancy_q1 = 0;
  std::size_t max_occupancy_q2 = 0;
  std::vector<double> receiver_ms;  ///< per-chunk receiver period
  std::vector<double> dsp_ms;
  std::vector<double> inference_ms;
  double wall_seconds = 0.0;
  Clock::time_point started{};
};

/// Runs receiver, signal processing and inference on three threads joined by
/// two drop-newest queues until the duration elapses, max_chunks are read or
/// the source is exhausted.
PipelineReport run_pipeline(ChunkSource& source, const Network<float>& net, const TokenizationConfig& tok,
                            const PipelineConfig& cfg);

/// Aggregates stage durations; needs at least 10 predictions.
StageTimings profile(const PipelineReport& report);

nlohmann::json to_json(const StageTimings& t);

/// `seq,timestamp_ns,label,logscore_b,...` with timestamps relative to the run start.
void write_prediction_log(const std::filesystem::path& path, const PipelineReport& report);

}  // namespace protoid
