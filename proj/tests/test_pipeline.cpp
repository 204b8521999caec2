#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "protoid/bounded_queue.hpp"
#include "protoid/error.hpp"
#include "protoid/pipeline.hpp"
#include "protoid/transformer.hpp"
#include "test_util.hpp"

using namespace protoid;
using namespace std::chrono_literals;

namespace {

const TokenizationConfig kTok{8, 16, 0};

Transformer<float> tiny_net() {
  TransformerConfig c = TransformerConfig::for_tokens(kTok, 2, 16);
  c.num_layers = 1;
  c.d_ff = 2 * c.d_model;
  Transformer<float> net(c);
  RandomSource rng(1);
  net.initialize(rng);
  return net;
}

std::vector<std::int16_t> noise_recording(Index chunks, std::uint64_t seed) {
  RandomSource rng(seed);
  return quantize_int16(protoid::testing::random_signal(chunks * kChunkSamples, rng, kReceiverRate));
}

void check_invariants(const PipelineReport& r, const QueueConfig& q) {
  CHECK(r.chunks_in == r.predictions.size() + r.drops_q1 + r.drops_q2 + r.in_flight);
  CHECK(r.max_occupancy_q1 <= q.q1_capacity);
  CHECK(r.max_occupancy_q2 <= q.q2_capacity);
  for (std::size_t i = 1; i < r.predictions.size(); ++i) {
    CHECK(r.predictions[i].sequence > r.predictions[i - 1].sequence);
  }
  for (const PredictionRecord& p : r.predictions) {
    CHECK(p.received <= p.processed);
    CHECK(p.processed <= p.predicted);
  }
}

}  // namespace

TEST_CASE("the bounded queue drops the newest item when full") {
  BoundedQueue<int> q(2);
  CHECK(q.try_push(1));
  CHECK(q.try_push(2));
  CHECK_FALSE(q.try_push(3));
  CHECK(q.dropped() == 1);
  std::stop_source never;
  CHECK(q.pop(never.get_token()) == 1);
  CHECK(q.try_push(4));
  q.close();
  CHECK_FALSE(q.try_push(5));
  CHECK(q.pop(never.get_token()) == 2);
  CHECK(q.pop(never.get_token()) == 4);
  CHECK_FALSE(q.pop(never.get_token()).has_value());
  CHECK(q.max_occupancy() == 2);
  CHECK(q.pushed() == 3);
  CHECK_THROWS_AS(BoundedQueue<int>(0), Error);
}

TEST_CASE("LoopSource slices whole buffers and loops") {
  std::vector<std::int16_t> data(std::size_t(2 * kChunkSamples * 2 + 10));
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::int16_t>(i % 1000);
  LoopSource once(data, false);
  CHECK(once.chunks_per_pass() == 2);
  const auto a = once.next();
  REQUIRE(a.has_value());
  CHECK(a->size() == std::size_t(2 * kChunkSamples));
  CHECK(once.next().has_value());
  CHECK_FALSE(once.next().has_value());

  LoopSource looped(data, true);
  const auto first = looped.next();
  looped.next();
  CHECK(looped.next() == first);
  CHECK_THROWS_AS(LoopSource(std::vector<std::int16_t>(10), true), Error);
}

TEST_CASE("quantize_int16 scales to 0.9 full scale") {
  CVector v(3);
  v << Complex(2.0, 0.0), Complex(0.0, -1.0), Complex(0.5, 0.25);
  const auto q = quantize_int16(ComplexSignal(v, 20e6));
  REQUIRE(q.size() == 6);
  CHECK(q[0] == 29490);
  CHECK(q[3] == -14745);
  CHECK(q[5] == 3686);
  CHECK_THROWS_AS(quantize_int16(ComplexSignal(CVector::Zero(4), 20e6)), Error);
}

TEST_CASE("resample_to changes the rate and rejects off-grid rates") {
  const ComplexSignal s = protoid::testing::tone(2000, 1e6, 20e6);
  const ComplexSignal up = resample_to(s, kReceiverRate);
  CHECK(up.sample_rate_hz == kReceiverRate);
  CHECK(std::abs(double(up.size()) - 2000 * 25.0 / 16.0) <= 2.0);
  CHECK(resample_to(s, 20e6).samples == s.samples);
  CHECK_THROWS_AS(resample_to(s, 20e6 + 300.0), Error);
}

TEST_CASE("process_chunk produces the model input") {
  const auto rec = noise_recording(1, 2);
  const InterleavedVector<float> v = process_chunk(rec);
  CHECK(v.size() == 2 * kModelSamples);
  CHECK(v.cwiseAbs().maxCoeff() <= 1.0f);
  CHECK_THROWS_AS(process_chunk(std::vector<std::int16_t>(100)), Error);
}

TEST_CASE("the pipeline keeps order, bounds and conservation") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(8, 3), true);
  PipelineConfig cfg;
  cfg.duration = 1500ms;
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  CHECK(r.chunks_in > 100);
  CHECK(r.predictions.size() > 10);
  check_invariants(r, cfg.queues);
  CHECK(r.in_flight == 0);
  const StageTimings t = profile(r);
  CHECK(t.end_to_end.mean_ms > 0.0);
  CHECK(t.predictions_per_second > 0.0);
  CHECK(t.receiver.mean_ms == doctest::Approx(kChunkSamples / kReceiverRate * 1e3).epsilon(0.1));
}

TEST_CASE("a stalled inference stage drops chunks without deadlock") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(4, 4), true);
  PipelineConfig cfg;
  cfg.duration = 2500ms;
  cfg.inference_delay = [](std::uint64_t seq) { return seq == 0 ? std::chrono::nanoseconds(1s) : 0ns; };
  const auto t0 = Clock::now();
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  CHECK(Clock::now() - t0 < 10s);
  CHECK(r.drops_q1 + r.drops_q2 > 0);
  check_invariants(r, cfg.queues);
}

TEST_CASE("without draining, leftovers are counted in flight") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(4, 5), true);
  PipelineConfig cfg;
  cfg.duration = 300ms;
  cfg.drain_on_shutdown = false;
  cfg.inference_delay = [](std::uint64_t) { return std::chrono::nanoseconds(50ms); };
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  check_invariants(r, cfg.queues);
}

TEST_CASE("throughput follows the slowest stage") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(4, 6), true);
  PipelineConfig cfg;
  cfg.duration = 3s;
  cfg.receiver_delay = [](std::uint64_t) { return std::chrono::nanoseconds(5ms); };
  cfg.dsp_delay = [](std::uint64_t) { return std::chrono::nanoseconds(10ms); };
  cfg.inference_delay = [](std::uint64_t) { return std::chrono::nanoseconds(15ms); };
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  check_invariants(r, cfg.queues);
  const StageTimings t = profile(r);
  CHECK(t.predictions_per_second == doctest::Approx(1000.0 / 15.0).epsilon(0.2));
  CHECK(t.inference.mean_ms >= 15.0);
  CHECK(r.drops_q1 + r.drops_q2 > 0);
}

TEST_CASE("end-to-end latency is positive with no added delay") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(2, 7), true);
  PipelineConfig cfg;
  cfg.pacing = 4.0;
  cfg.max_chunks = 40;
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  check_invariants(r, cfg.queues);
  CHECK(r.chunks_in == 40);
  CHECK(profile(r).end_to_end.mean_ms > 0.0);
}

TEST_CASE("pipeline predictions equal offline processing bit for bit") {
  const Transformer<float> net = tiny_net();
  const auto rec = noise_recording(5, 8);
  LoopSource src(rec, true);
  PipelineConfig cfg;
  cfg.max_chunks = 60;
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  REQUIRE_FALSE(r.predictions.empty());

  LoopSource replay(rec, false);
  std::vector<std::vector<std::int16_t>> chunks;
  while (auto c = replay.next()) chunks.push_back(std::move(*c));
  for (const PredictionRecord& p : r.predictions) {
    const Inference offline = infer(process_chunk(chunks[p.sequence % chunks.size()]), net, kTok);
    CHECK(offline.label == p.label);
    CHECK(offline.log_scores == p.log_scores);
  }
}

TEST_CASE("randomized stage jitter keeps the invariants") {
  const Transformer<float> net = tiny_net();
  RandomSource rng(9);
  for (int run = 0; run < 5; ++run) {
    std::uniform_int_distribution<int> cap(1, 4);
    PipelineConfig cfg;
    cfg.queues = {std::size_t(cap(rng)), std::size_t(cap(rng))};
    cfg.duration = 400ms;
    cfg.drain_on_shutdown = run % 2 == 0;
    const std::uint64_t s = rng();
    auto jitter = [s](int max_us, std::uint64_t salt) {
      return [=](std::uint64_t seq) {
        return std::chrono::nanoseconds(std::int64_t(derive_seed(s ^ salt, seq) % std::uint64_t(max_us)) * 1000);
      };
    };
    cfg.receiver_delay = jitter(500, 1);
    cfg.dsp_delay = jitter(2000, 2);
    cfg.inference_delay = jitter(4000, 3);
    LoopSource src(noise_recording(3, 10 + std::uint64_t(run)), true);
    const PipelineReport r = run_pipeline(src, net, kTok, cfg);
    check_invariants(r, cfg.queues);
  }
}

TEST_CASE("profiling needs ten predictions") {
  PipelineReport r;
  r.predictions.resize(9);
  try {
    profile(r);
    FAIL("profile accepted 9 predictions");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("configuration errors surface before threads start") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(1, 11), true);
  PipelineConfig cfg;
  CHECK_THROWS_AS(run_pipeline(src, net, kTok, cfg), Error);  // unbounded run
  cfg.max_chunks = 5;
  CHECK_THROWS_AS(run_pipeline(src, net, TokenizationConfig{8, 32, 0}, cfg), Error);
  cfg.pacing = -1.0;
  CHECK_THROWS_AS(run_pipeline(src, net, kTok, cfg), Error);
}

TEST_CASE("the prediction log has one line per prediction") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(2, 12), true);
  PipelineConfig cfg;
  cfg.max_chunks = 20;
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  const auto path = std::filesystem::temp_directory_path() / "protoid_predictions.log";
  write_prediction_log(path, r);
  std::ifstream in(path);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#' || line.rfind("seq", 0) == 0) continue;
    ++lines;
    CHECK(std::count(line.begin(), line.end(), ',') == 2 + 4);
  }
  CHECK(lines == r.predictions.size());
  std::filesystem::remove(path);
}

TEST_CASE("a free-running receiver still conserves chunks") {
  const Transformer<float> net = tiny_net();
  LoopSource src(noise_recording(2, 13), true);
  PipelineConfig cfg;
  cfg.pacing = 0.0;
  cfg.max_chunks = 200;
  const PipelineReport r = run_pipeline(src, net, kTok, cfg);
  check_invariants(r, cfg.queues);
  CHECK(r.chunks_in == 200);
  CHECK(r.drops_q1 > 0);
}
