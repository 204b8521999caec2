#include "protoid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "protoid/bounded_queue.hpp"
#include "protoid/dataset_io.hpp"
#include "protoid/dsp.hpp"
#include "protoid/error.hpp"

namespace protoid {

namespace fs = std::filesystem;
using nlohmann::json;

LoopSource::LoopSource(std::vector<std::int16_t> interleaved, bool loop) : data_(std::move(interleaved)), loop_(loop) {
  require(data_.size() >= static_cast<std::size_t>(2 * kChunkSamples), ErrorKind::InsufficientSamples,
          "source recording shorter than one receiver buffer");
}

Index LoopSource::chunks_per_pass() const {
  return static_cast<Index>(data_.size() / static_cast<std::size_t>(2 * kChunkSamples));
}

std::optional<std::vector<std::int16_t>> LoopSource::next() {
  const auto len = static_cast<std::size_t>(2 * kChunkSamples);
  if (cursor_ + len > data_.size()) {
    if (!loop_) return std::nullopt;
    cursor_ = 0;
  }
  std::vector<std::int16_t> out(data_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                data_.begin() + static_cast<std::ptrdiff_t>(cursor_ + len));
  cursor_ += len;
  return out;
}

std::vector<std::int16_t> quantize_int16(const ComplexSignal& signal) {
  require_nonempty(signal, "quantize_int16");
  double peak = 0.0;
  for (Index i = 0; i < signal.size(); ++i) {
    peak = std::max({peak, std::abs(signal.samples[i].real()), std::abs(signal.samples[i].imag())});
  }
  require(peak > 0.0, ErrorKind::DegenerateSignal, "cannot quantize an all-zero signal");
  const double scale = 0.9 * 32767.0 / peak;
  std::vector<std::int16_t> out(static_cast<std::size_t>(2 * signal.size()));
  for (Index i = 0; i < signal.size(); ++i) {
    out[static_cast<std::size_t>(2 * i)] = static_cast<std::int16_t>(std::lround(signal.samples[i].real() * scale));
    out[static_cast<std::size_t>(2 * i + 1)] = static_cast<std::int16_t>(std::lround(signal.samples[i].imag() * scale));
  }
  return out;
}

ComplexSignal resample_to(const ComplexSignal& signal, double target_rate_hz) {
  require(target_rate_hz > 0.0 && signal.sample_rate_hz > 0.0, ErrorKind::InvalidSpec, "rates must be positive");
  const double grid = 1e3;
  const auto to = static_cast<Index>(std::llround(target_rate_hz / grid));
  const auto from = static_cast<Index>(std::llround(signal.sample_rate_hz / grid));
  require(std::abs(static_cast<double>(to) * grid - target_rate_hz) < 1e-6 * target_rate_hz &&
              std::abs(static_cast<double>(from) * grid - signal.sample_rate_hz) < 1e-6 * signal.sample_rate_hz,
          ErrorKind::InvalidSpec, "sample rates must lie on a 1 kHz grid");
  const Index g = std::gcd(to, from);
  ComplexSignal out = rational_resample(signal, to / g, from / g);
  out.sample_rate_hz = target_rate_hz;
  return out;
}

std::unique_ptr<ChunkSource> make_synthetic_source(const std::vector<ProtocolId>& protocols, double snr_db,
                                                   ChannelModel channel, int bursts_per_protocol,
                                                   std::uint64_t seed, bool loop) {
  require(!protocols.empty() && bursts_per_protocol > 0, ErrorKind::InvalidSpec, "synthetic source needs bursts");
  RandomSource rng(seed);
  std::vector<CVector> parts;
  Index total = 0;
  for (int i = 0; i < bursts_per_protocol; ++i) {
    for (ProtocolId p : protocols) {
      ComplexSignal burst = generate_burst(BurstSpec::defaults(p), rng);
      burst = apply_channel(burst, draw_realization(channel, rng));
      burst = add_awgn(burst, snr_db, rng);
      ComplexSignal up = resample_to(burst, kReceiverRate);
      total += up.size();
      parts.push_back(std::move(up.samples));
    }
  }
  ComplexSignal all(CVector(total), kReceiverRate);
  Index at = 0;
  for (const CVector& v : parts) {
    all.samples.segment(at, v.size()) = v;
    at += v.size();
  }
  return std::make_unique<LoopSource>(quantize_int16(all), loop);
}

std::unique_ptr<ChunkSource> make_file_source(const std::vector<fs::path>& captures, bool loop) {
  require(!captures.empty(), ErrorKind::InvalidInput, "no captures to play back");
  std::vector<CVector> parts;
  Index total = 0;
  for (const fs::path& p : captures) {
    const Capture c = read_capture(p);
    ComplexSignal up = resample_to(c.signal, kReceiverRate);
    total += up.size();
    parts.push_back(std::move(up.samples));
  }
  ComplexSignal all(CVector(total), kReceiverRate);
  Index at = 0;
  for (const CVector& v : parts) {
    all.samples.segment(at, v.size()) = v;
    at += v.size();
  }
  return std::make_unique<LoopSource>(quantize_int16(all), loop);
}

InterleavedVector<float> process_chunk(const std::vector<std::int16_t>& iq) {
  require(iq.size() == static_cast<std::size_t>(2 * kChunkSamples), ErrorKind::ShapeError,
          "receiver buffer must hold " + std::to_string(kChunkSamples) + " IQ pairs");
  ComplexSignal raw(CVector(kChunkSamples), kReceiverRate);
  for (Index i = 0; i < kChunkSamples; ++i) {
    raw.samples[i] = Complex(iq[static_cast<std::size_t>(2 * i)] / 32768.0, iq[static_cast<std::size_t>(2 * i + 1)] / 32768.0);
  }
  ComplexSignal base = rational_resample(raw, kResampleUp, kResampleDown);
  return interleave_iq<float>(base.segment(0, kModelSamples));
}

Inference infer(const InterleavedVector<float>& values, const Network<float>& net, const TokenizationConfig& tok) {
  const ComplexSignal s = deinterleave_iq<float>(values, 20e6);
  ComplexSignal window = s.segment(0, tok.sequence_len());
  if (mean_power(window) > 0.0) window = power_normalize(window);
  const RowMatrix<float> scores = net.forward(tokenize<float>(window, tok));
  Inference out;
  out.log_scores.assign(scores.data(), scores.data() + scores.size());
  out.label = argmax_rows(scores).front();
  return out;
}

namespace {

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

/// Sleeps until `deadline` or until stop is requested.
void sleep_until(std::stop_token stop, Clock::time_point deadline) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  cv.wait_until(lock, stop, deadline, [] { return false; });
}

StageStats stats_of(const std::vector<double>& v) {
  StageStats s;
  s.count = static_cast<Index>(v.size());
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean_ms = std::accumulate(v.begin(), v.end(), 0.0) / n;
  s.max_ms = *std::max_element(v.begin(), v.end());
  double var = 0.0;
  for (double x : v) var += (x - s.mean_ms) * (x - s.mean_ms);
  s.stddev_ms = std::sqrt(var / n);
  return s;
}

}  // namespace

PipelineReport run_pipeline(ChunkSource& source, const Network<float>& net, const TokenizationConfig& tok,
                            const PipelineConfig& cfg) {
  validate(tok);
  require(tok.slices == net.seq_len() && tok.token_dim() == net.token_dim(), ErrorKind::ConfigError,
          "tokenizer does not match the network input shape");
  require(tok.sequence_len() <= kModelSamples, ErrorKind::ConfigError,
          "model consumes more than " + std::to_string(kModelSamples) + " samples per prediction");
  require(cfg.pacing >= 0.0, ErrorKind::ConfigError, "pacing must be >= 0");
  require(cfg.duration || cfg.max_chunks, ErrorKind::ConfigError, "set a duration or a chunk count");

  BoundedQueue<BufferChunk> q1(cfg.queues.q1_capacity);
  BoundedQueue<ProcessedChunk> q2(cfg.queues.q2_capacity);
  PipelineReport rep;
  rep.started = Clock::now();

  std::mutex done_mutex;
  std::condition_variable done_cv;
  bool receiver_done = false;
  std::stop_source abort;
  std::mutex error_mutex;
  std::exception_ptr error;
  auto record_error = [&] {
    std::lock_guard lock(error_mutex);
    if (!error) error = std::current_exception();
    abort.request_stop();
  };

  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(cfg.pacing * static_cast<double>(kChunkSamples) / kReceiverRate));

  std::jthread receiver([&](std::stop_token stop) {
    try {
      Clock::time_point last = Clock::now();
      Clock::time_point deadline = last;
      for (std::uint64_t seq = 0; !stop.stop_requested() && !abort.stop_requested(); ++seq) {
        if (cfg.max_chunks && seq >= *cfg.max_chunks) break;
        std::optional<std::vector<std::int16_t>> data = source.next();
        if (!data) break;
        if (cfg.receiver_delay) std::this_thread::sleep_for(cfg.receiver_delay(seq));
        if (period.count() > 0) {
          deadline = std::max(deadline + period, Clock::now() - period);
          sleep_until(stop, deadline);
        }
        const Clock::time_point now = Clock::now();
        ++rep.chunks_in;
        q1.try_push(BufferChunk{std::move(*data), seq, now});
        rep.receiver_ms.push_back(ms_between(last, now));
        last = now;
      }
    } catch (...) {
      record_error();
    }
    {
      std::lock_guard lock(done_mutex);
      receiver_done = true;
    }
    done_cv.notify_all();
  });

  std::jthread dsp([&] {
    try {
      while (std::optional<BufferChunk> c = q1.pop(abort.get_token())) {
        const Clock::time_point t0 = Clock::now();
        ProcessedChunk p;
        p.values = process_chunk(c->iq);
        if (cfg.dsp_delay) std::this_thread::sleep_for(cfg.dsp_delay(c->sequence));
        p.sequence = c->sequence;
        p.received = c->received;
        p.processed = Clock::now();
        rep.dsp_ms.push_back(ms_between(t0, p.processed));
        q2.try_push(std::move(p));
      }
    } catch (...) {
      record_error();
    }
    q2.close();
  });

  std::jthread inference([&] {
    try {
      while (std::optional<ProcessedChunk> p = q2.pop(abort.get_token())) {
        const Clock::time_point t0 = Clock::now();
        Inference out = infer(p->values, net, tok);
        if (cfg.inference_delay) std::this_thread::sleep_for(cfg.inference_delay(p->sequence));
        PredictionRecord r;
        r.sequence = p->sequence;
        r.label = out.label;
        r.log_scores = std::move(out.log_scores);
        r.received = p->received;
        r.processed = p->processed;
        r.predicted = Clock::now();
        rep.inference_ms.push_back(ms_between(t0, r.predicted));
        if (cfg.on_prediction) cfg.on_prediction(r);
        rep.predictions.push_back(std::move(r));
      }
    } catch (...) {
      record_error();
    }
  });

  {
    std::unique_lock lock(done_mutex);
    auto finished = [&] { return receiver_done || abort.stop_requested(); };
    if (cfg.duration) {
      done_cv.wait_until(lock, rep.started + *cfg.duration, finished);
    } else {
      done_cv.wait(lock, finished);
    }
  }
  receiver.request_stop();
  receiver.join();
  if (!cfg.drain_on_shutdown) abort.request_stop();
  q1.close();
  dsp.join();
  inference.join();
  if (error) std::rethrow_exception(error);

  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - rep.started).count();
  rep.drops_q1 = q1.dropped();
  rep.drops_q2 = q2.dropped();
  rep.in_flight = q1.size() + q2.size();
  rep.max_occupancy_q1 = q1.max_occupancy();
  rep.max_occupancy_q2 = q2.max_occupancy();
  return rep;
}

StageTimings profile(const PipelineReport& report) {
  require(report.predictions.size() >= 10, ErrorKind::InsufficientData,
          "profiling needs at least 10 predictions, have " + std::to_string(report.predictions.size()));
  StageTimings t;
  t.receiver = stats_of(report.receiver_ms);
  t.dsp = stats_of(report.dsp_ms);
  t.inference = stats_of(report.inference_ms);
  std::vector<double> e2e;
  for (const PredictionRecord& r : report.predictions) e2e.push_back(ms_between(r.received, r.predicted));
  t.end_to_end = stats_of(e2e);
  const double span = std::chrono::duration<double>(report.predictions.back().predicted -
                                                    report.predictions.front().predicted).count();
  t.predictions_per_second = span > 0.0 ? static_cast<double>(report.predictions.size() - 1) / span : 0.0;
  t.drops_q1 = report.drops_q1;
  t.drops_q2 = report.drops_q2;
  return t;
}

json to_json(const StageTimings& t) {
  auto stage = [](const StageStats& s) {
    return json{{"mean_ms", s.mean_ms}, {"max_ms", s.max_ms}, {"stddev_ms", s.stddev_ms}, {"count", s.count}};
  };
  return {{"receiver", stage(t.receiver)},
          {"signal_processing", stage(t.dsp)},
          {"inference", stage(t.inference)},
          {"end_to_end", stage(t.end_to_end)},
          {"predictions_per_second", t.predictions_per_second},
          {"drops_q1", t.drops_q1},
          {"drops_q2", t.drops_q2}};
}

void write_prediction_log(const fs::path& path, const PipelineReport& report) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out.precision(9);
  for (const PredictionRecord& r : report.predictions) {
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(r.predicted - report.started).count();
    const std::string label = r.label < static_cast<int>(kAllProtocols.size())
                                  ? std::string(to_string(kAllProtocols[static_cast<std::size_t>(r.label)]))
                                  : std::to_string(r.label);
    out << r.sequence << ',' << ns << ',' << label;
    for (float s : r.log_scores) out << ',' << s;
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace protoid
