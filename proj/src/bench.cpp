#include "esafl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "esafl/codec.hpp"
#include "esafl/eshe.hpp"
#include "esafl/prg.hpp"
#include "esafl/wire.hpp"

namespace esafl::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

TimingStats quantiles(std::vector<double> samples) {
  TimingStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  auto at = [&samples](double q) {
    size_t idx = size_t(q * double(samples.size() - 1) + 0.5);
    return samples[std::min(idx, samples.size() - 1)];
  };
  s.p50_ms = at(0.5);
  s.p90_ms = at(0.9);
  s.max_ms = samples.back();
  return s;
}

}  // namespace

const std::vector<ShapeProfile>& all_shapes() {
  static const std::vector<ShapeProfile> shapes = {
      {"fcn", 101770}, {"alexnet", 1250000}, {"lstm", 4020000}};
  return shapes;
}

ShapeProfile shape_by_name(const std::string& name) {
  for (const auto& s : all_shapes())
    if (s.name == name) return s;
  throw BenchError("unknown shape profile: " + name);
}

EstimateReport estimate(uint64_t gradients, const SchemeParams& params) {
  EstimateReport r;
  r.gradients = gradients;
  r.capacity = params.capacity();
  r.ciphertexts_packed = (gradients + r.capacity - 1) / r.capacity;
  uint64_t per_poly = params.reals_per_poly();
  r.ciphertexts_unpacked = (gradients + per_poly - 1) / per_poly;
  r.body_bytes_per_ciphertext =
      uint64_t(params.n) * SchemeParams::coeff_bytes(params.log_q);
  uint64_t ct_wire = 10 + r.body_bytes_per_ciphertext;
  r.submit_frame_bytes = 5 + 8 + 4 + 8 + 2 + r.ciphertexts_packed * ct_wire;
  r.result_frame_bytes = 5 + 8 + 2 + 8 + 2 + r.ciphertexts_packed * ct_wire;
  r.uplink_bytes_per_round = params.num_clients * r.submit_frame_bytes;
  r.downlink_bytes_per_round = params.num_clients * r.result_frame_bytes;
  r.plain_bytes = gradients * 8;
  return r;
}

BenchReport run_bench(uint64_t gradients, const SchemeParams& params,
                      uint32_t reps, uint64_t seed) {
  if (reps == 0) throw BenchError("reps must be >= 1");
  BenchReport report;
  report.est = estimate(gradients, params);
  report.reps = reps;

  const uint32_t N = params.num_clients;
  std::vector<double> encrypt_samples, aggregate_samples, decrypt_samples;
  double err_sum = 0.0;
  uint64_t err_count = 0;

  Rng key_rng(seed);
  KeyMaterial km = keygen(params, key_rng);

  for (uint32_t rep = 0; rep < reps; ++rep) {
    uint64_t t = rep + 1;
    std::vector<double> exact(gradients, 0.0);
    std::vector<Ciphertext> agg;
    for (uint32_t i = 0; i < N; ++i) {
      Rng data_rng(seed ^ (uint64_t(rep) << 32) ^ (uint64_t(i) << 16));
      std::vector<double> v(gradients);
      for (auto& x : v) x = data_rng.next_unit();
      for (uint64_t j = 0; j < gradients; ++j) exact[j] += v[j];

      auto t0 = Clock::now();
      RingElem a_t = round_public(t, km.seed_b, km.a0, params);
      std::vector<PackedPlain> plains = ecd_pack(v, params);
      std::vector<Ciphertext> cts;
      cts.reserve(plains.size());
      for (const PackedPlain& m : plains)
        cts.push_back(encrypt(a_t, t, km.enc_keys[i], m, params, data_rng));
      encrypt_samples.push_back(ms_since(t0));

      if (rep == 0 && i == 0) {
        wire::RoundSubmit sub;
        sub.round = t;
        sub.client_id = i;
        sub.original_length = gradients;
        sub.cts = cts;
        report.measured_submit_bytes = wire::serialize(sub).size() + 5;
      }

      auto t1 = Clock::now();
      if (agg.empty()) {
        agg = std::move(cts);
      } else {
        for (size_t k = 0; k < agg.size(); ++k) {
          Ciphertext pair[2] = {std::move(agg[k]), std::move(cts[k])};
          agg[k] = eval_add(pair, params);
        }
      }
      aggregate_samples.push_back(ms_since(t1));
    }

    auto t2 = Clock::now();
    RingElem a_t = round_public(t, km.seed_b, km.a0, params);
    std::vector<PackedPlain> plains;
    plains.reserve(agg.size());
    for (const Ciphertext& ct : agg)
      plains.push_back(decrypt(a_t, km.dec_key, ct, params));
    std::vector<double> sums = dcd_unpk(plains, N, gradients, params);
    decrypt_samples.push_back(ms_since(t2));

    for (uint64_t j = 0; j < gradients; ++j) {
      double err = std::abs(sums[j] - exact[j]);
      err_sum += err;
      report.err_max = std::max(report.err_max, err);
    }
    err_count += gradients;
  }

  report.encrypt_ms = quantiles(std::move(encrypt_samples));
  report.aggregate_ms = quantiles(std::move(aggregate_samples));
  report.decrypt_ms = quantiles(std::move(decrypt_samples));
  report.err_mean = err_sum / double(err_count);
  return report;
}

std::string estimate_csv_header() {
  return "shape,gradients,capacity,ciphertexts_packed,ciphertexts_unpacked,"
         "body_bytes_per_ciphertext,submit_frame_bytes,result_frame_bytes,"
         "uplink_bytes_per_round,downlink_bytes_per_round,plain_bytes";
}

std::string estimate_csv_row(const std::string& shape,
                             const EstimateReport& r) {
  std::ostringstream os;
  os << shape << ',' << r.gradients << ',' << r.capacity << ','
     << r.ciphertexts_packed << ',' << r.ciphertexts_unpacked << ','
     << r.body_bytes_per_ciphertext << ',' << r.submit_frame_bytes << ','
     << r.result_frame_bytes << ',' << r.uplink_bytes_per_round << ','
     << r.downlink_bytes_per_round << ',' << r.plain_bytes;
  return os.str();
}

std::string bench_csv_header() {
  return std::string("shape,reps,") +
         "encrypt_p50_ms,encrypt_p90_ms,encrypt_max_ms,"
         "aggregate_p50_ms,aggregate_p90_ms,aggregate_max_ms,"
         "decrypt_p50_ms,decrypt_p90_ms,decrypt_max_ms,"
         "err_mean,err_max,ciphertexts,submit_frame_bytes";
}

std::string bench_csv_row(const std::string& shape, const BenchReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << shape << ',' << r.reps << ',' << r.encrypt_ms.p50_ms << ','
     << r.encrypt_ms.p90_ms << ',' << r.encrypt_ms.max_ms << ','
     << r.aggregate_ms.p50_ms << ',' << r.aggregate_ms.p90_ms << ','
     << r.aggregate_ms.max_ms << ',' << r.decrypt_ms.p50_ms << ','
     << r.decrypt_ms.p90_ms << ',' << r.decrypt_ms.max_ms << ','
     << std::scientific << r.err_mean << ',' << r.err_max << std::defaultfloat
     << ',' << r.est.ciphertexts_packed << ',' << r.est.submit_frame_bytes;
  return os.str();
}

}  // namespace esafl::bench
