/**
 * @file bench.hpp
 * @brief Capacity/traffic estimation (closed forms) and pipeline timing over
 *        synthetic workloads of the three benchmark gradient counts.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esafl/params.hpp"

namespace esafl::bench {

struct BenchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Benchmark workloads, identified purely by gradient-vector length.
struct ShapeProfile {
  std::string name;
  uint64_t gradients;
};

/// fcn = 101770, alexnet = 1250000, lstm = 4020000.
ShapeProfile shape_by_name(const std::string& name);
const std::vector<ShapeProfile>& all_shapes();

/// Static byte accounting; no cryptography executed.
struct EstimateReport {
  uint64_t gradients = 0;
  uint64_t capacity = 0;                 ///< reals per ciphertext
  uint64_t ciphertexts_packed = 0;       ///< ceil(L / capacity)
  uint64_t ciphertexts_unpacked = 0;     ///< ceil(L / reals_per_poly)
  uint64_t body_bytes_per_ciphertext = 0;  ///< n * ceil(log_q/8)
  uint64_t submit_frame_bytes = 0;       ///< one client's round upload
  uint64_t result_frame_bytes = 0;       ///< broadcast download per client
  uint64_t uplink_bytes_per_round = 0;   ///< N * submit
  uint64_t downlink_bytes_per_round = 0; ///< N * result
  uint64_t plain_bytes = 0;              ///< L * 8 (doubles on the wire)
};
EstimateReport estimate(uint64_t gradients, const SchemeParams& params);

struct TimingStats {
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double max_ms = 0.0;
};

/// One timed encrypt/aggregate/decrypt pipeline over N synthetic vectors.
struct BenchReport {
  EstimateReport est;
  uint32_t reps = 0;
  TimingStats encrypt_ms;    ///< per client: prpg + encode + pack + encrypt
  TimingStats aggregate_ms;  ///< ciphertext sum over N clients
  TimingStats decrypt_ms;    ///< decrypt + unpack + decode
  double err_mean = 0.0;     ///< mean |decoded - exact aggregate|
  double err_max = 0.0;
  uint64_t measured_submit_bytes = 0;  ///< serializer output, must equal est
};
BenchReport run_bench(uint64_t gradients, const SchemeParams& params,
                      uint32_t reps, uint64_t seed);

std::string estimate_csv_header();
std::string estimate_csv_row(const std::string& shape, const EstimateReport&);
std::string bench_csv_header();
std::string bench_csv_row(const std::string& shape, const BenchReport&);

}  // namespace esafl::bench
