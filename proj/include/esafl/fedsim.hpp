/**
 * @file fedsim.hpp
 * @brief End-to-end workflow orchestration: trusted-dealer initialization,
 *        per-round client training -> normalize -> encode/pack -> encrypt ->
 *        submit, aggregator barrier + ciphertext sum, client decrypt ->
 *        decode -> de-normalize -> model update. Runs in-process or over TCP.
 *
 * The synthetic workload is linear regression y = w* . x (+ optional noise):
 * convergence is verifiable at desk scale while the crypto path is exercised
 * exactly as it would be for a neural model of the same gradient count.
 *
 * A plaintext-reference pipeline runs side by side with shared seeds; every
 * round the decoded aggregate is compared against the exact clear-domain sum
 * of the same clients' clipped gradients.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esafl/eshe.hpp"
#include "esafl/params.hpp"
#include "esafl/wire.hpp"

namespace esafl::fedsim {

struct FedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A run terminated by protocol abort (e.g. barrier timeout).
struct ProtocolAbort : std::runtime_error {
  wire::AbortReason reason;
  ProtocolAbort(wire::AbortReason r, const std::string& msg)
      : std::runtime_error(msg), reason(r) {}
};

enum class Mode { in_process, tcp };

struct TrainConfig {
  uint32_t rounds = 200;
  double learning_rate = 0.05;
  double clip_bound = 4.0;
  std::vector<double> weights;  ///< alpha_i; empty means all ones
  uint32_t model_dim = 16;
  std::vector<uint32_t> samples_per_client;  ///< empty means 32 each
  uint64_t data_seed = 1;
  double data_noise = 0.0;
  double w_star_scale = 1.0;  ///< scales the ground-truth model
  uint32_t minibatch = 0;  ///< 0 = full local dataset each round
  Mode mode = Mode::in_process;
  uint64_t key_seed = 7;
  double timeout_seconds = 60.0;  ///< tcp barrier timeout
  std::optional<uint32_t> drop_client;  ///< test hook: client never submits
  std::string host = "127.0.0.1";
  uint16_t port = 0;  ///< 0 = ephemeral
};

struct RoundTrace {
  uint32_t round = 0;
  double loss_plain = 0.0;
  double loss_enc = 0.0;
  double max_model_diff = 0.0;  ///< max |w_enc - w_plain| component-wise
  uint64_t uplink_bytes = 0;
  uint64_t downlink_bytes = 0;
  double wall_ms_encrypt = 0.0;
  double wall_ms_decrypt = 0.0;
  double wall_ms_aggregate = 0.0;
  double agg_deviation = 0.0;  ///< max |decoded aggregate - exact sum|
};

struct TrainResult {
  std::vector<RoundTrace> rounds;
  std::vector<double> final_model;  ///< encrypted-pipeline model
  std::vector<std::vector<double>> client_models;
  std::vector<double> plain_model;  ///< plaintext-reference model
  std::vector<double> w_star;       ///< ground truth of the synthetic task
  bool aborted = false;
  wire::AbortReason abort_reason = wire::AbortReason::protocol_error;
  bool clipped_any = false;
};

struct SyntheticTask {
  struct ClientData {
    std::vector<double> xs;  // row-major, samples x dim
    std::vector<double> ys;
    uint32_t samples = 0;
  };
  uint32_t dim = 0;
  std::vector<double> w_star;
  std::vector<ClientData> clients;
  uint64_t total_samples() const;
};

SyntheticTask make_synthetic(const TrainConfig& cfg, uint32_t num_clients);

/// Exact MSE gradient of the linear model on the given sample rows.
std::vector<double> local_gradient(std::span<const double> w,
                                   const SyntheticTask::ClientData& data,
                                   std::span<const uint32_t> batch);

double dataset_loss(std::span<const double> w, const SyntheticTask& task);

/// Clip to [-c, c] then map affinely onto [0, 1].
std::vector<double> normalize(std::span<const double> g, double clip_bound);
/// Inverse for a sum of `count` normalized vectors; exact up to codec error.
std::vector<double> denormalize(std::span<const double> v, uint32_t count,
                                double clip_bound);

/// Trusted-dealer key distribution: per-client confidential KeyIssue
/// messages plus the keyless aggregator profile.
struct DealtKeys {
  std::vector<wire::KeyIssue> clients;
  std::string aggregator_profile;
};
DealtKeys keydeal(const SchemeParams& params, Rng& rng);

/// Per-round barrier state machine shared by both transports. Holds no key
/// material: its whole observable state is ciphertext bodies and counters.
class AggregatorCore {
 public:
  explicit AggregatorCore(const SchemeParams& params);

  /// Buffers one submission; returns the broadcast result exactly once,
  /// when the round-t set completes. Throws ProtocolAbort on duplicate or
  /// stale-round submissions.
  std::optional<wire::RoundResult> submit(const wire::RoundSubmit& sub);

  uint64_t current_round() const { return round_; }
  double last_aggregate_ms() const { return last_aggregate_ms_; }

 private:
  SchemeParams params_;
  uint64_t round_ = 1;
  std::vector<std::optional<wire::RoundSubmit>> pending_;
  uint32_t received_ = 0;
  double last_aggregate_ms_ = 0.0;
};

/// Concurrent TCP aggregator: accepts N connections, enforces the per-round
/// barrier with a timeout, broadcasts each RoundResult (or Abort) to every
/// client. Runs on the calling thread until `rounds` complete or the run
/// aborts.
struct ServerRoundStats {
  uint64_t uplink_bytes = 0;
  uint64_t downlink_bytes = 0;
  double wall_ms_aggregate = 0.0;
};
std::vector<ServerRoundStats> serve_aggregator(const SchemeParams& params,
                                               wire::TcpListener& listener,
                                               uint32_t rounds,
                                               double timeout_seconds);

/// Full training run per the synchronous workflow; deterministic given the
/// config seeds. Round failures terminate with a partial trace
/// (result.aborted set).
TrainResult run_training(const SchemeParams& params, const TrainConfig& cfg);

/// One real client endpoint driving `cfg.rounds` rounds over an established
/// stream (multi-process deployments). Returns the final local model;
/// throws ProtocolAbort if the aggregator aborts.
std::vector<double> run_client(const SchemeParams& params,
                               const wire::KeyIssue& keys, uint32_t client_id,
                               const TrainConfig& cfg,
                               wire::ByteStream& stream);

/// Trace CSV with the documented columns, one row per round.
std::string trace_to_csv(const TrainResult& result);

}  // namespace esafl::fedsim
