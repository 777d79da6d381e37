#include "esafl/fedsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "esafl/codec.hpp"
#include "esafl/prg.hpp"

namespace esafl::fedsim {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double gauss(Rng& rng) {
  // Box-Muller; data generation only (crypto noise uses the ring sampler)
  double u1 = rng.next_unit();
  while (u1 <= 0.0) u1 = rng.next_unit();
  double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  uint64_t x = a;
  x ^= b + 0x9e3779b97f4a7c15ull + (x << 6) + (x >> 2);
  x ^= c + 0x9e3779b97f4a7c15ull + (x << 6) + (x >> 2);
  return x;
}

std::vector<double> clip_vector(std::span<const double> g, double c,
                                bool* clipped) {
  std::vector<double> out(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    double v = g[i];
    if (v > c || v < -c) {
      if (clipped) *clipped = true;
      v = std::clamp(v, -c, c);
    }
    out[i] = v;
  }
  return out;
}

}  // namespace

uint64_t SyntheticTask::total_samples() const {
  uint64_t total = 0;
  for (const auto& c : clients) total += c.samples;
  return total;
}

SyntheticTask make_synthetic(const TrainConfig& cfg, uint32_t num_clients) {
  if (cfg.model_dim == 0) throw FedError("synthetic task needs model_dim >= 1");
  SyntheticTask task;
  task.dim = cfg.model_dim;
  Rng rng(cfg.data_seed);
  task.w_star.resize(cfg.model_dim);
  for (auto& w : task.w_star)
    w = cfg.w_star_scale * (2.0 * rng.next_unit() - 1.0);
  task.clients.resize(num_clients);
  for (uint32_t i = 0; i < num_clients; ++i) {
    uint32_t samples = 32;
    if (!cfg.samples_per_client.empty())
      samples = cfg.samples_per_client[i % cfg.samples_per_client.size()];
    if (samples == 0) throw FedError("each client needs at least one sample");
    auto& cd = task.clients[i];
    cd.samples = samples;
    cd.xs.resize(size_t(samples) * cfg.model_dim);
    cd.ys.resize(samples);
    for (uint32_t s = 0; s < samples; ++s) {
      double y = 0.0;
      for (uint32_t d = 0; d < cfg.model_dim; ++d) {
        double x = gauss(rng);
        cd.xs[size_t(s) * cfg.model_dim + d] = x;
        y += task.w_star[d] * x;
      }
      cd.ys[s] = y + cfg.data_noise * gauss(rng);
    }
  }
  return task;
}

std::vector<double> local_gradient(std::span<const double> w,
                                   const SyntheticTask::ClientData& data,
                                   std::span<const uint32_t> batch) {
  uint32_t dim = uint32_t(w.size());
  std::vector<double> g(dim, 0.0);
  if (batch.empty()) throw FedError("local_gradient: empty batch");
  for (uint32_t s : batch) {
    const double* x = data.xs.data() + size_t(s) * dim;
    double residual = -data.ys[s];
    for (uint32_t d = 0; d < dim; ++d) residual += w[d] * x[d];
    for (uint32_t d = 0; d < dim; ++d) g[d] += 2.0 * residual * x[d];
  }
  for (auto& v : g) v /= double(batch.size());
  return g;
}

double dataset_loss(std::span<const double> w, const SyntheticTask& task) {
  double acc = 0.0;
  uint64_t count = 0;
  for (const auto& cd : task.clients) {
    for (uint32_t s = 0; s < cd.samples; ++s) {
      const double* x = cd.xs.data() + size_t(s) * task.dim;
      double r = -cd.ys[s];
      for (uint32_t d = 0; d < task.dim; ++d) r += w[d] * x[d];
      acc += r * r;
      ++count;
    }
  }
  return acc / double(count);
}

std::vector<double> normalize(std::span<const double> g, double clip_bound) {
  if (!(clip_bound > 0.0)) throw FedError("normalize: clip bound must be > 0");
  std::vector<double> out(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    double v = std::clamp(g[i], -clip_bound, clip_bound);
    out[i] = (v + clip_bound) / (2.0 * clip_bound);
  }
  return out;
}

std::vector<double> denormalize(std::span<const double> v, uint32_t count,
                                double clip_bound) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out[i] = 2.0 * clip_bound * v[i] - double(count) * clip_bound;
  return out;
}

DealtKeys keydeal(const SchemeParams& params, Rng& rng) {
  KeyMaterial km = keygen(params, rng);
  // distribution-time consistency: the joint key is the exact signed sum
  SmallPoly check = key_sum(km.enc_keys);
  if (check.coeffs != km.dec_key.coeffs)
    throw FedError("keydeal: joint key does not match the key sum");
  DealtKeys deal;
  deal.aggregator_profile = params.to_profile();
  deal.clients.reserve(params.num_clients);
  for (uint32_t i = 0; i < params.num_clients; ++i) {
    wire::KeyIssue ki;
    ki.params_profile = deal.aggregator_profile;
    ki.enc_key = km.enc_keys[i];
    ki.dec_key = km.dec_key;
    ki.a0 = km.a0;
    ki.seed_b = km.seed_b;
    deal.clients.push_back(std::move(ki));
  }
  return deal;
}

AggregatorCore::AggregatorCore(const SchemeParams& params)
    : params_(params), pending_(params.num_clients) {}

std::optional<wire::RoundResult> AggregatorCore::submit(
    const wire::RoundSubmit& sub) {
  if (sub.round != round_)
    throw ProtocolAbort(wire::AbortReason::stale_round,
                        "aggregator: submission for round " +
                            std::to_string(sub.round) + " during round " +
                            std::to_string(round_));
  if (sub.client_id >= params_.num_clients)
    throw ProtocolAbort(wire::AbortReason::protocol_error,
                        "aggregator: unknown client id");
  if (pending_[sub.client_id])
    throw ProtocolAbort(wire::AbortReason::duplicate_submission,
                        "aggregator: duplicate submission");
  for (const Ciphertext& ct : sub.cts)
    if (ct.round != sub.round || ct.agg_count != 1)
      throw ProtocolAbort(wire::AbortReason::protocol_error,
                          "aggregator: ciphertext tags disagree with the "
                          "submission round");
  pending_[sub.client_id] = sub;
  ++received_;
  if (received_ < params_.num_clients) return std::nullopt;

  // barrier complete: aggregate position-wise
  const auto& first = *pending_[0];
  for (const auto& p : pending_) {
    if (p->cts.size() != first.cts.size() ||
        p->original_length != first.original_length)
      throw ProtocolAbort(wire::AbortReason::protocol_error,
                          "aggregator: submission shape mismatch");
  }
  auto t0 = Clock::now();
  wire::RoundResult result;
  result.round = round_;
  result.agg_count = uint16_t(params_.num_clients);
  result.original_length = first.original_length;
  result.cts.reserve(first.cts.size());
  std::vector<Ciphertext> column(params_.num_clients);
  for (size_t k = 0; k < first.cts.size(); ++k) {
    for (uint32_t i = 0; i < params_.num_clients; ++i)
      column[i] = pending_[i]->cts[k];
    result.cts.push_back(eval_add(column, params_));
  }
  last_aggregate_ms_ = ms_since(t0);
  for (auto& p : pending_) p.reset();
  received_ = 0;
  ++round_;
  return result;
}

namespace {

/// Client-side transport abstraction: one submit and one blocking result
/// fetch per round. Byte counts reflect the framed wire encoding.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void submit(const wire::RoundSubmit& sub, uint64_t& uplink) = 0;
  virtual wire::RoundResult await_result(uint64_t& downlink) = 0;
};

struct InProcessHub {
  AggregatorCore core;
  SchemeParams params;
  std::vector<uint8_t> result_bytes;
  bool have_result = false;
  double aggregate_ms = 0.0;

  explicit InProcessHub(const SchemeParams& p) : core(p), params(p) {}
};

class InProcessChannel : public Channel {
 public:
  explicit InProcessChannel(InProcessHub& hub) : hub_(hub) {}

  void submit(const wire::RoundSubmit& sub, uint64_t& uplink) override {
    // run the real serializer both ways so byte accounting is measured
    auto payload = wire::serialize(sub);
    uplink += payload.size() + 5;
    auto parsed = std::get<wire::RoundSubmit>(wire::deserialize(
        wire::MsgType::round_submit, payload, hub_.params));
    auto result = hub_.core.submit(parsed);
    if (result) {
      hub_.result_bytes = wire::serialize(*result);
      hub_.have_result = true;
      hub_.aggregate_ms = hub_.core.last_aggregate_ms();
    }
  }

  wire::RoundResult await_result(uint64_t& downlink) override {
    if (!hub_.have_result)
      throw ProtocolAbort(wire::AbortReason::barrier_timeout,
                          "aggregator barrier never completed");
    downlink += hub_.result_bytes.size() + 5;
    return std::get<wire::RoundResult>(wire::deserialize(
        wire::MsgType::round_result, hub_.result_bytes, hub_.params));
  }

 private:
  InProcessHub& hub_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(std::unique_ptr<wire::TcpStream> stream)
      : stream_(std::move(stream)) {}

  void submit(const wire::RoundSubmit& sub, uint64_t& uplink) override {
    uplink += wire::framed_size(sub, *params_);
    wire::send_message(*stream_, sub);
  }

  wire::RoundResult await_result(uint64_t& downlink) override {
    auto msg = wire::recv_message(*stream_, *params_);
    if (const auto* abort = std::get_if<wire::Abort>(&msg))
      throw ProtocolAbort(abort->reason, "aggregator aborted the round");
    auto& rr = std::get<wire::RoundResult>(msg);
    downlink += wire::framed_size(rr, *params_);
    return rr;
  }

  void set_params(const SchemeParams* p) { params_ = p; }

 private:
  std::unique_ptr<wire::TcpStream> stream_;
  const SchemeParams* params_ = nullptr;
};

struct ClientState {
  uint32_t id = 0;
  std::vector<double> w;
  SparseTernaryKey enc_key;
  SmallPoly dec_key;
  RingElem a0;
  uint64_t seed_b = 0;
  Rng noise_rng{0};
};

}  // namespace

std::vector<ServerRoundStats> serve_aggregator(const SchemeParams& params,
                                               wire::TcpListener& listener,
                                               uint32_t rounds,
                                               double timeout_seconds) {
  const uint32_t N = params.num_clients;
  std::vector<std::unique_ptr<wire::TcpStream>> conns;
  conns.reserve(N);
  for (uint32_t i = 0; i < N; ++i) conns.push_back(listener.accept());

  std::mutex mu;
  std::condition_variable cv;
  AggregatorCore core(params);
  std::optional<wire::RoundResult> ready;
  std::optional<ProtocolAbort> failure;
  uint64_t uplink_round = 0;
  bool stopping = false;

  auto reader = [&](wire::TcpStream* stream) {
    try {
      while (true) {
        auto msg = wire::recv_message(*stream, params);
        auto* sub = std::get_if<wire::RoundSubmit>(&msg);
        if (!sub) continue;  // aggregator only consumes submissions
        std::lock_guard<std::mutex> lk(mu);
        if (stopping) return;
        uplink_round += wire::framed_size(*sub, params);
        auto result = core.submit(*sub);
        if (result) {
          ready = std::move(result);
          cv.notify_all();
        }
      }
    } catch (const ProtocolAbort& abort) {
      std::lock_guard<std::mutex> lk(mu);
      if (!failure) failure = abort;
      cv.notify_all();
    } catch (const wire::WireError&) {
      // connection closed or malformed stream; the barrier timeout handles it
      cv.notify_all();
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lk(mu);
      if (!failure)
        failure = ProtocolAbort(wire::AbortReason::protocol_error, e.what());
      cv.notify_all();
    }
  };

  std::vector<std::thread> readers;
  readers.reserve(N);
  for (auto& c : conns) readers.emplace_back(reader, c.get());

  auto shutdown = [&](std::optional<wire::Abort> abort_msg) {
    {
      std::lock_guard<std::mutex> lk(mu);
      stopping = true;
    }
    for (auto& c : conns) {
      if (abort_msg) {
        try {
          wire::send_message(*c, *abort_msg);
        } catch (const wire::WireError&) {
        }
      }
      c->shutdown_both();
    }
    for (auto& r : readers) r.join();
  };

  std::vector<ServerRoundStats> stats;
  stats.reserve(rounds);
  auto timeout = std::chrono::duration<double>(timeout_seconds);
  for (uint32_t t = 1; t <= rounds; ++t) {
    std::unique_lock<std::mutex> lk(mu);
    bool done = cv.wait_for(lk, timeout, [&] {
      return ready.has_value() || failure.has_value();
    });
    if (failure) {
      auto f = *failure;
      lk.unlock();
      shutdown(wire::Abort{f.reason});
      throw f;
    }
    if (!done) {
      lk.unlock();
      shutdown(wire::Abort{wire::AbortReason::barrier_timeout});
      throw ProtocolAbort(wire::AbortReason::barrier_timeout,
                          "aggregator: barrier timeout in round " +
                              std::to_string(t));
    }
    wire::RoundResult result = std::move(*ready);
    ready.reset();
    ServerRoundStats row;
    row.uplink_bytes = uplink_round;
    uplink_round = 0;
    row.wall_ms_aggregate = core.last_aggregate_ms();
    lk.unlock();
    for (auto& c : conns) {
      wire::send_message(*c, result);
      row.downlink_bytes += wire::framed_size(result, params);
    }
    stats.push_back(row);
  }
  shutdown(std::nullopt);
  return stats;
}

TrainResult run_training(const SchemeParams& params, const TrainConfig& cfg) {
  const uint32_t N = params.num_clients;
  if (!(cfg.learning_rate > 0.0)) throw FedError("learning_rate must be > 0");
  if (!(cfg.clip_bound > 0.0)) throw FedError("clip_bound must be > 0");
  if (!cfg.weights.empty() && cfg.weights.size() != N)
    throw FedError("weights must be empty or one per client");
  for (double a : cfg.weights)
    if (!(a > 0.0)) throw FedError("client weights must be > 0");
  if (cfg.drop_client && *cfg.drop_client >= N)
    throw FedError("drop_client out of range");

  SyntheticTask task = make_synthetic(cfg, N);
  std::vector<double> alphas =
      cfg.weights.empty() ? std::vector<double>(N, 1.0) : cfg.weights;

  Rng key_rng(cfg.key_seed);
  DealtKeys deal = keydeal(params, key_rng);

  std::vector<ClientState> clients(N);
  for (uint32_t i = 0; i < N; ++i) {
    auto& c = clients[i];
    c.id = i;
    c.w.assign(cfg.model_dim, 0.0);
    c.enc_key = deal.clients[i].enc_key;
    c.dec_key = deal.clients[i].dec_key;
    c.a0 = deal.clients[i].a0;
    c.seed_b = deal.clients[i].seed_b;
    c.noise_rng = Rng(mix_seed(cfg.key_seed, 0x6e6f697365ull, i));
  }

  // transport
  std::optional<InProcessHub> hub;
  std::optional<wire::TcpListener> listener;
  std::thread server;
  std::vector<ServerRoundStats> server_stats;
  std::optional<ProtocolAbort> server_failure;
  std::mutex server_mu;
  std::vector<std::unique_ptr<Channel>> channels(N);
  if (cfg.mode == Mode::in_process) {
    hub.emplace(params);
    for (uint32_t i = 0; i < N; ++i)
      channels[i] = std::make_unique<InProcessChannel>(*hub);
  } else {
    listener.emplace(cfg.host, cfg.port);
    server = std::thread([&] {
      try {
        auto stats = serve_aggregator(params, *listener, cfg.rounds,
                                      cfg.timeout_seconds);
        std::lock_guard<std::mutex> lk(server_mu);
        server_stats = std::move(stats);
      } catch (const ProtocolAbort& abort) {
        std::lock_guard<std::mutex> lk(server_mu);
        server_failure = abort;
      }
    });
    for (uint32_t i = 0; i < N; ++i) {
      auto ch = std::make_unique<TcpChannel>(
          wire::tcp_connect(cfg.host, listener->port()));
      ch->set_params(&params);
      channels[i] = std::move(ch);
    }
  }

  TrainResult result;
  result.w_star = task.w_star;
  std::vector<double> w_plain(cfg.model_dim, 0.0);

  auto pick_batch = [&](uint32_t round, uint32_t client) {
    uint32_t samples = task.clients[client].samples;
    std::vector<uint32_t> idx;
    if (cfg.minibatch == 0 || cfg.minibatch >= samples) {
      idx.resize(samples);
      std::iota(idx.begin(), idx.end(), 0);
    } else {
      Rng rng(mix_seed(cfg.data_seed, round, client));
      idx.reserve(cfg.minibatch);
      for (uint32_t k = 0; k < cfg.minibatch; ++k)
        idx.push_back(uint32_t(rng.below(samples)));
    }
    return idx;
  };

  auto finish = [&](bool aborted, wire::AbortReason reason) {
    result.aborted = aborted;
    result.abort_reason = reason;
    result.final_model = clients[0].w;
    result.client_models.clear();
    for (const auto& c : clients) result.client_models.push_back(c.w);
    result.plain_model = w_plain;
    if (server.joinable()) server.join();
  };

  for (uint32_t t = 1; t <= cfg.rounds; ++t) {
    RoundTrace row;
    row.round = t;

    // gradients of the encrypted pipeline, plus the exact clear-domain sum
    std::vector<std::vector<uint32_t>> batches(N);
    std::vector<std::vector<double>> clipped(N);
    std::vector<double> exact_sum(cfg.model_dim, 0.0);
    for (uint32_t i = 0; i < N; ++i) {
      batches[i] = pick_batch(t, i);
      std::vector<double> g =
          local_gradient(clients[i].w, task.clients[i], batches[i]);
      for (auto& v : g) v *= alphas[i];
      clipped[i] = clip_vector(g, cfg.clip_bound, &result.clipped_any);
      for (uint32_t d = 0; d < cfg.model_dim; ++d)
        exact_sum[d] += clipped[i][d];
    }

    // submit phase
    bool submit_failed = false;
    wire::AbortReason submit_reason = wire::AbortReason::protocol_error;
    double encrypt_ms_total = 0.0;
    for (uint32_t i = 0; i < N; ++i) {
      if (cfg.drop_client && *cfg.drop_client == i) continue;
      auto t0 = Clock::now();
      std::vector<double> normalized = normalize(clipped[i], cfg.clip_bound);
      std::vector<PackedPlain> plains = ecd_pack(normalized, params);
      RingElem a_t = round_public(t, clients[i].seed_b, clients[i].a0, params);
      wire::RoundSubmit sub;
      sub.round = t;
      sub.client_id = i;
      sub.original_length = cfg.model_dim;
      sub.cts.reserve(plains.size());
      for (const PackedPlain& m : plains)
        sub.cts.push_back(
            encrypt(a_t, t, clients[i].enc_key, m, params, clients[i].noise_rng));
      encrypt_ms_total += ms_since(t0);
      try {
        channels[i]->submit(sub, row.uplink_bytes);
      } catch (const ProtocolAbort& abort) {
        submit_failed = true;
        submit_reason = abort.reason;
        break;
      }
    }
    row.wall_ms_encrypt = encrypt_ms_total / double(N);

    // result phase: every client decrypts and updates
    std::vector<double> decoded_agg;
    double decrypt_ms_total = 0.0;
    bool round_failed = submit_failed;
    wire::AbortReason fail_reason = submit_reason;
    if (!round_failed) {
      for (uint32_t i = 0; i < N && !round_failed; ++i) {
        try {
          wire::RoundResult rr = channels[i]->await_result(row.downlink_bytes);
          if (rr.round != t || rr.agg_count != N)
            throw ProtocolAbort(wire::AbortReason::protocol_error,
                                "client: unexpected round result");
          auto t0 = Clock::now();
          RingElem a_t =
              round_public(t, clients[i].seed_b, clients[i].a0, params);
          std::vector<PackedPlain> plains;
          plains.reserve(rr.cts.size());
          for (const Ciphertext& ct : rr.cts)
            plains.push_back(decrypt(a_t, clients[i].dec_key, ct, params));
          std::vector<double> sums =
              dcd_unpk(plains, N, rr.original_length, params);
          std::vector<double> G = denormalize(sums, N, cfg.clip_bound);
          for (uint32_t d = 0; d < cfg.model_dim; ++d)
            clients[i].w[d] -= cfg.learning_rate * G[d] / double(N);
          decrypt_ms_total += ms_since(t0);
          if (i == 0) decoded_agg = std::move(G);
        } catch (const ProtocolAbort& abort) {
          round_failed = true;
          fail_reason = abort.reason;
        }
      }
    }
    if (round_failed) {
      finish(true, fail_reason);
      return result;
    }
    row.wall_ms_decrypt = decrypt_ms_total / double(N);

    // synchronous-SGD invariant: all clients hold the identical model
    for (uint32_t i = 1; i < N; ++i)
      if (clients[i].w != clients[0].w)
        throw FedError("model consistency violated after round " +
                       std::to_string(t));

    for (uint32_t d = 0; d < cfg.model_dim; ++d)
      row.agg_deviation =
          std::max(row.agg_deviation, std::abs(decoded_agg[d] - exact_sum[d]));

    // plaintext-reference pipeline with the same seeds and batches
    std::vector<double> plain_sum(cfg.model_dim, 0.0);
    for (uint32_t i = 0; i < N; ++i) {
      std::vector<double> g = local_gradient(w_plain, task.clients[i], batches[i]);
      for (auto& v : g) v *= alphas[i];
      std::vector<double> cg = clip_vector(g, cfg.clip_bound, nullptr);
      for (uint32_t d = 0; d < cfg.model_dim; ++d) plain_sum[d] += cg[d];
    }
    for (uint32_t d = 0; d < cfg.model_dim; ++d)
      w_plain[d] -= cfg.learning_rate * plain_sum[d] / double(N);

    row.loss_enc = dataset_loss(clients[0].w, task);
    row.loss_plain = dataset_loss(w_plain, task);
    for (uint32_t d = 0; d < cfg.model_dim; ++d)
      row.max_model_diff = std::max(row.max_model_diff,
                                    std::abs(clients[0].w[d] - w_plain[d]));

    if (cfg.mode == Mode::in_process) {
      row.wall_ms_aggregate = hub->aggregate_ms;
      hub->have_result = false;  // next round
    }
    result.rounds.push_back(row);
  }

  if (cfg.mode == Mode::tcp) {
    if (server.joinable()) server.join();
    std::lock_guard<std::mutex> lk(server_mu);
    if (server_failure) {
      result.aborted = true;
      result.abort_reason = server_failure->reason;
    }
    for (size_t t = 0; t < server_stats.size() && t < result.rounds.size(); ++t)
      result.rounds[t].wall_ms_aggregate = server_stats[t].wall_ms_aggregate;
  }

  finish(result.aborted, result.abort_reason);
  return result;
}

std::vector<double> run_client(const SchemeParams& params,
                               const wire::KeyIssue& keys, uint32_t client_id,
                               const TrainConfig& cfg,
                               wire::ByteStream& stream) {
  const uint32_t N = params.num_clients;
  if (client_id >= N) throw FedError("run_client: client id out of range");
  SyntheticTask task = make_synthetic(cfg, N);
  const auto& data = task.clients[client_id];
  double alpha = cfg.weights.empty() ? 1.0 : cfg.weights[client_id];
  std::vector<double> w(cfg.model_dim, 0.0);
  Rng noise_rng(mix_seed(cfg.key_seed, 0x6e6f697365ull, client_id));

  for (uint32_t t = 1; t <= cfg.rounds; ++t) {
    std::vector<uint32_t> batch;
    uint32_t samples = data.samples;
    if (cfg.minibatch == 0 || cfg.minibatch >= samples) {
      batch.resize(samples);
      std::iota(batch.begin(), batch.end(), 0);
    } else {
      Rng rng(mix_seed(cfg.data_seed, t, client_id));
      for (uint32_t k = 0; k < cfg.minibatch; ++k)
        batch.push_back(uint32_t(rng.below(samples)));
    }
    std::vector<double> g = local_gradient(w, data, batch);
    for (auto& v : g) v *= alpha;
    std::vector<double> normalized = normalize(g, cfg.clip_bound);
    std::vector<PackedPlain> plains = ecd_pack(normalized, params);
    RingElem a_t = round_public(t, keys.seed_b, keys.a0, params);

    wire::RoundSubmit sub;
    sub.round = t;
    sub.client_id = client_id;
    sub.original_length = cfg.model_dim;
    for (const PackedPlain& m : plains)
      sub.cts.push_back(encrypt(a_t, t, keys.enc_key, m, params, noise_rng));
    wire::send_message(stream, sub);

    auto msg = wire::recv_message(stream, params);
    if (const auto* abort = std::get_if<wire::Abort>(&msg))
      throw ProtocolAbort(abort->reason, "aggregator aborted the run");
    const auto& rr = std::get<wire::RoundResult>(msg);
    if (rr.round != t || rr.agg_count != N)
      throw ProtocolAbort(wire::AbortReason::protocol_error,
                          "client: unexpected round result");
    std::vector<PackedPlain> sums_packed;
    sums_packed.reserve(rr.cts.size());
    for (const Ciphertext& ct : rr.cts)
      sums_packed.push_back(decrypt(a_t, keys.dec_key, ct, params));
    std::vector<double> sums =
        dcd_unpk(sums_packed, N, rr.original_length, params);
    std::vector<double> G = denormalize(sums, N, cfg.clip_bound);
    for (uint32_t d = 0; d < cfg.model_dim; ++d)
      w[d] -= cfg.learning_rate * G[d] / double(N);
  }
  return w;
}

std::string trace_to_csv(const TrainResult& result) {
  std::ostringstream os;
  os << "round,loss_plain,loss_enc,max_model_diff,uplink_bytes,downlink_bytes,"
        "wall_ms_encrypt,wall_ms_decrypt,wall_ms_aggregate\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const RoundTrace& r : result.rounds) {
    os << r.round << ',' << fmt(r.loss_plain) << ',' << fmt(r.loss_enc) << ','
       << fmt(r.max_model_diff) << ',' << r.uplink_bytes << ','
       << r.downlink_bytes << ',' << fmt(r.wall_ms_encrypt) << ','
       << fmt(r.wall_ms_decrypt) << ',' << fmt(r.wall_ms_aggregate) << '\n';
  }
  return os.str();
}

}  // namespace esafl::fedsim
