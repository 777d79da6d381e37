/**
 * @file esafl_cli.cpp
 * @brief Operator entry point: key dealing, self-tests, demo training runs,
 *        capacity/traffic estimation, and pipeline benchmarks.
 *
 * Exit codes: 0 ok, 1 test failure, 2 config error, 3 protocol abort.
 */
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "esafl/bench.hpp"
#include "esafl/fedsim.hpp"
#include "esafl/params.hpp"
#include "esafl/prg.hpp"
#include "esafl/selftest.hpp"
#include "esafl/wire.hpp"

using namespace esafl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTestFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

SchemeParams load_params(const std::string& profile,
                         std::optional<uint32_t> clients,
                         std::optional<uint32_t> logq0) {
  SchemeParams base;
  if (profile == "desk") {
    base = desk_profile();
  } else if (profile == "full") {
    base = full_profile();
  } else {
    std::ifstream in(profile);
    if (!in.good())
      throw ParamsError("cannot open profile file: " + profile);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    base = SchemeParams::from_profile(text);
  }
  if (clients || logq0) {
    ParamOverrides ov;
    ov.ternary_weight = base.ternary_weight;
    ov.gaussian_sigma = base.gaussian_sigma;
    ov.seed_bits_k = base.seed_bits_k;
    ov.reals_per_slot = base.reals_per_slot;
    base = setup(base.n, base.log_q, base.log_p, logq0.value_or(base.log_q0),
                 clients.value_or(base.num_clients), ov);
  }
  return base;
}

bool parse_host_port(const std::string& s, std::string& host, uint16_t& port) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos) return false;
  host = s.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  try {
    unsigned long p = std::stoul(s.substr(colon + 1));
    if (p > 65535) return false;
    port = uint16_t(p);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

bool dir_writable(const std::string& dir) {
  std::string probe = dir + "/.esafl_probe";
  std::ofstream f(probe);
  if (!f.good()) return false;
  f.close();
  std::remove(probe.c_str());
  return true;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.good()) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Minimal SVG loss-curve plot: plain and encrypted losses per round.
std::string loss_svg(const fedsim::TrainResult& res) {
  const int width = 640, height = 360, margin = 40;
  double lo = 1e300, hi = -1e300;
  for (const auto& r : res.rounds) {
    lo = std::min({lo, r.loss_plain, r.loss_enc});
    hi = std::max({hi, r.loss_plain, r.loss_enc});
  }
  if (res.rounds.empty() || !(hi > lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  auto x_of = [&](size_t i) {
    size_t n = std::max<size_t>(res.rounds.size() - 1, 1);
    return margin + double(width - 2 * margin) * double(i) / double(n);
  };
  auto y_of = [&](double v) {
    return height - margin -
           double(height - 2 * margin) * (v - lo) / (hi - lo);
  };
  auto polyline = [&](bool enc, const char* color) {
    std::string pts;
    char buf[64];
    for (size_t i = 0; i < res.rounds.size(); ++i) {
      double v = enc ? res.rounds[i].loss_enc : res.rounds[i].loss_plain;
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x_of(i), y_of(v));
      pts += buf;
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  };
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
      "height=\"360\">\n<rect width=\"640\" height=\"360\" fill=\"white\"/>\n";
  svg += "<line x1=\"40\" y1=\"320\" x2=\"600\" y2=\"320\" stroke=\"black\"/>\n";
  svg += "<line x1=\"40\" y1=\"40\" x2=\"40\" y2=\"320\" stroke=\"black\"/>\n";
  svg += polyline(false, "#888888");
  svg += polyline(true, "#c0392b");
  svg +=
      "<text x=\"470\" y=\"60\" font-size=\"12\" fill=\"#888888\">plain</text>\n"
      "<text x=\"470\" y=\"76\" font-size=\"12\" fill=\"#c0392b\">encrypted"
      "</text>\n"
      "<text x=\"250\" y=\"345\" font-size=\"12\">round</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ESAFL: additively homomorphic secure aggregation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string profile = "desk";
  if (const char* env = std::getenv("ESAFL_PROFILE")) profile = env;
  uint64_t seed = 1;
  std::optional<uint32_t> clients_override, logq0_override;
  app.add_option("--profile", profile,
                 "parameter profile: desk, full, or a profile file");
  app.add_option("--seed", seed, "deterministic seed");
  app.add_option("--clients", clients_override, "override client count N");
  app.add_option("--logq0", logq0_override, "override slot precision bits");

  // keygen
  auto* keygen_cmd =
      app.add_subcommand("keygen", "deal keys and profiles into a directory");
  std::string out_dir = ".";
  keygen_cmd->add_option("--out", out_dir, "output directory");

  // estimate
  auto* estimate_cmd = app.add_subcommand(
      "estimate", "closed-form ciphertext counts and traffic (no crypto)");
  std::optional<uint64_t> est_length;
  std::string est_shape;
  std::string est_csv;
  estimate_cmd->add_option("-L,--length", est_length, "gradient count");
  estimate_cmd->add_option("--shape", est_shape, "fcn, alexnet, or lstm");
  estimate_cmd->add_option("--csv", est_csv, "also write a CSV file");

  // selftest
  auto* selftest_cmd =
      app.add_subcommand("selftest", "run the property/oracle suites");
  uint32_t trials = 100;
  std::string golden_dir = "tests/golden";
  selftest_cmd->add_option("--trials", trials, "randomized trial count");
  selftest_cmd->add_option("--golden", golden_dir, "golden fixture directory");

  // demo
  auto* demo_cmd =
      app.add_subcommand("demo", "synthetic federated training run");
  fedsim::TrainConfig cfg;
  std::string mode = "in_process";
  std::string demo_out;
  std::string listen_spec;
  std::optional<uint32_t> drop_client;
  bool plot = false;
  demo_cmd->add_option("--rounds", cfg.rounds, "training rounds");
  demo_cmd->add_option("--dim", cfg.model_dim, "model dimension");
  demo_cmd->add_option("--lr", cfg.learning_rate, "learning rate");
  demo_cmd->add_option("--clip", cfg.clip_bound, "gradient clip bound");
  demo_cmd->add_option("--noise", cfg.data_noise, "label noise std dev");
  demo_cmd->add_option("--minibatch", cfg.minibatch,
                       "minibatch size (0 = full batch)");
  demo_cmd->add_option("--mode", mode, "in_process or tcp");
  demo_cmd->add_option("--listen", listen_spec, "tcp listen host:port");
  demo_cmd->add_option("--timeout", cfg.timeout_seconds,
                       "tcp barrier timeout seconds");
  demo_cmd->add_option("--drop-client", drop_client,
                       "test hook: this client never submits");
  demo_cmd->add_option("--out", demo_out, "directory for trace.csv and plot");
  demo_cmd->add_flag("--plot", plot, "write loss.svg next to the trace");

  // bench
  auto* bench_cmd =
      app.add_subcommand("bench", "timed encrypt/aggregate/decrypt pipeline");
  std::string bench_shape = "all";
  uint32_t reps = 3;
  std::optional<uint64_t> bench_length;
  std::string bench_csv;
  bench_cmd->add_option("--shape", bench_shape,
                        "fcn, alexnet, lstm, or all");
  bench_cmd->add_option("-L,--length", bench_length,
                        "explicit gradient count instead of a shape");
  bench_cmd->add_option("--reps", reps, "repetitions");
  bench_cmd->add_option("--csv", bench_csv, "also write a CSV file");

  // prpg (cross-process determinism surface)
  auto* prpg_cmd = app.add_subcommand(
      "prpg", "emit the shared round polynomial a^t for (t, B)");
  uint64_t prpg_t = 2;
  std::string prpg_b_hex = "0123456789abcdef";
  std::string prpg_out;
  prpg_cmd->add_option("--t", prpg_t, "round counter");
  prpg_cmd->add_option("--b", prpg_b_hex, "secret seed B as hex");
  prpg_cmd->add_option("--out", prpg_out, "output file (default stdout hex)");

  // aggregate / client (multi-process roles)
  auto* agg_cmd =
      app.add_subcommand("aggregate", "run the aggregator over TCP");
  std::string agg_listen = "127.0.0.1:7100";
  uint32_t agg_rounds = 200;
  double agg_timeout = 60.0;
  agg_cmd->add_option("--listen", agg_listen, "listen host:port");
  agg_cmd->add_option("--rounds", agg_rounds, "rounds to serve");
  agg_cmd->add_option("--timeout", agg_timeout, "barrier timeout seconds");

  auto* client_cmd = app.add_subcommand("client", "run one client over TCP");
  std::string client_keys;
  std::string client_connect = "127.0.0.1:7100";
  uint32_t client_id = 0;
  fedsim::TrainConfig ccfg;
  client_cmd->add_option("--keys", client_keys, "client key file from keygen")
      ->required();
  client_cmd->add_option("--connect", client_connect, "aggregator host:port");
  client_cmd->add_option("--id", client_id, "client index");
  client_cmd->add_option("--rounds", ccfg.rounds, "training rounds");
  client_cmd->add_option("--dim", ccfg.model_dim, "model dimension");
  client_cmd->add_option("--lr", ccfg.learning_rate, "learning rate");
  client_cmd->add_option("--clip", ccfg.clip_bound, "gradient clip bound");

  CLI11_PARSE(app, argc, argv);

  try {
    SchemeParams params =
        load_params(profile, clients_override, logq0_override);

    if (*keygen_cmd) {
      if (!dir_writable(out_dir)) {
        std::cerr << "keygen: directory not writable: " << out_dir << "\n";
        return kExitConfig;
      }
      Rng rng(seed);
      fedsim::DealtKeys deal = fedsim::keydeal(params, rng);
      // Build every blob first so a failure leaves no partial key set.
      std::vector<std::vector<uint8_t>> blobs;
      for (const auto& ki : deal.clients) {
        wire::MemoryStream s;
        wire::send_message(s, ki);
        std::vector<uint8_t> bytes(s.pending());
        s.read_some(bytes);
        blobs.push_back(std::move(bytes));
      }
      write_text(out_dir + "/params.profile", deal.aggregator_profile);
      for (size_t i = 0; i < blobs.size(); ++i)
        write_file(out_dir + "/client_" + std::to_string(i) + ".key",
                   blobs[i]);
      std::cout << "wrote params.profile and " << blobs.size()
                << " client key files to " << out_dir << "\n";
      return kExitOk;
    }

    if (*estimate_cmd) {
      std::vector<std::pair<std::string, uint64_t>> rows;
      if (est_length) {
        rows.emplace_back("custom", *est_length);
      } else if (!est_shape.empty()) {
        auto s = bench::shape_by_name(est_shape);
        rows.emplace_back(s.name, s.gradients);
      } else {
        for (const auto& s : bench::all_shapes())
          rows.emplace_back(s.name, s.gradients);
      }
      std::string csv = bench::estimate_csv_header() + "\n";
      std::printf("%-8s %10s %8s %8s %14s %14s %12s\n", "shape", "gradients",
                  "ct", "ct_unpk", "uplink/round", "downlink/round", "plainMB");
      for (const auto& [name, length] : rows) {
        auto r = bench::estimate(length, params);
        std::printf("%-8s %10llu %8llu %8llu %14llu %14llu %12.2f\n",
                    name.c_str(), (unsigned long long)r.gradients,
                    (unsigned long long)r.ciphertexts_packed,
                    (unsigned long long)r.ciphertexts_unpacked,
                    (unsigned long long)r.uplink_bytes_per_round,
                    (unsigned long long)r.downlink_bytes_per_round,
                    double(r.plain_bytes) / (1 << 20));
        csv += bench::estimate_csv_row(name, r) + "\n";
      }
      if (!est_csv.empty()) write_text(est_csv, csv);
      return kExitOk;
    }

    if (*selftest_cmd) {
      auto results = selftest::run_all(params, trials, golden_dir, seed);
      for (const auto& r : results) {
        const char* tag = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
        std::printf("%-4s %-20s %s\n", tag, r.name.c_str(), r.detail.c_str());
      }
      if (trials == 0)
        std::printf("warning: trials=0, nothing was exercised\n");
      return selftest::all_passed(results) ? kExitOk : kExitTestFailure;
    }

    if (*demo_cmd) {
      if (mode == "tcp") {
        cfg.mode = fedsim::Mode::tcp;
        if (!listen_spec.empty() &&
            !parse_host_port(listen_spec, cfg.host, cfg.port)) {
          std::cerr << "bad --listen value: " << listen_spec << "\n";
          return kExitConfig;
        }
      } else if (mode != "in_process") {
        std::cerr << "bad --mode value: " << mode << "\n";
        return kExitConfig;
      }
      cfg.key_seed = seed;
      cfg.data_seed = seed + 1;
      cfg.drop_client = drop_client;
      fedsim::TrainResult res = fedsim::run_training(params, cfg);
      if (!demo_out.empty()) {
        write_text(demo_out + "/trace.csv", fedsim::trace_to_csv(res));
        if (plot) write_text(demo_out + "/loss.svg", loss_svg(res));
      }
      if (res.aborted) {
        std::cerr << "run aborted (reason " << uint32_t(res.abort_reason)
                  << ") after " << res.rounds.size() << " rounds\n";
        return kExitAbort;
      }
      const auto& last = res.rounds.back();
      double dist = 0.0;
      for (size_t d = 0; d < res.final_model.size(); ++d)
        dist = std::max(dist,
                        std::abs(res.final_model[d] - res.w_star[d]));
      std::printf("rounds=%zu loss_plain=%.3e loss_enc=%.3e "
                  "max_model_diff=%.3e dist_to_truth=%.3e\n",
                  res.rounds.size(), last.loss_plain, last.loss_enc,
                  last.max_model_diff, dist);
      std::printf("uplink/round=%llu B downlink/round=%llu B\n",
                  (unsigned long long)last.uplink_bytes,
                  (unsigned long long)last.downlink_bytes);
      return kExitOk;
    }

    if (*bench_cmd) {
      // benchmarks default to the full profile unless one was named
      if (profile == "desk" && !app.count("--profile") &&
          std::getenv("ESAFL_PROFILE") == nullptr)
        params = load_params("full", clients_override, logq0_override);
      std::vector<bench::ShapeProfile> shapes;
      if (bench_length) {
        shapes.push_back({"custom", *bench_length});
      } else if (bench_shape == "all") {
        shapes = bench::all_shapes();
      } else {
        shapes.push_back(bench::shape_by_name(bench_shape));
      }
      std::string csv = bench::bench_csv_header() + "\n";
      for (const auto& s : shapes) {
        auto r = bench::run_bench(s.gradients, params, reps, seed);
        std::printf(
            "%-8s ct=%llu enc_p50=%.1fms agg_p50=%.1fms dec_p50=%.1fms "
            "err_mean=%.3e err_max=%.3e\n",
            s.name.c_str(), (unsigned long long)r.est.ciphertexts_packed,
            r.encrypt_ms.p50_ms, r.aggregate_ms.p50_ms, r.decrypt_ms.p50_ms,
            r.err_mean, r.err_max);
        csv += bench::bench_csv_row(s.name, r) + "\n";
      }
      if (!bench_csv.empty()) write_text(bench_csv, csv);
      return kExitOk;
    }

    if (*prpg_cmd) {
      uint64_t B = std::stoull(prpg_b_hex, nullptr, 16);
      RingElem a = prpg(prpg_t, B, params);
      auto bytes = a.serialize();
      if (!prpg_out.empty()) {
        write_file(prpg_out, bytes);
      } else {
        for (uint8_t b : bytes) std::printf("%02x", b);
        std::printf("\n");
      }
      return kExitOk;
    }

    if (*agg_cmd) {
      std::string host;
      uint16_t port = 0;
      if (!parse_host_port(agg_listen, host, port)) {
        std::cerr << "bad --listen value: " << agg_listen << "\n";
        return kExitConfig;
      }
      wire::TcpListener listener(host, port);
      std::printf("aggregator listening on %s:%u for %u clients\n",
                  host.c_str(), listener.port(), params.num_clients);
      auto stats =
          fedsim::serve_aggregator(params, listener, agg_rounds, agg_timeout);
      std::printf("served %zu rounds\n", stats.size());
      return kExitOk;
    }

    if (*client_cmd) {
      std::string host;
      uint16_t port = 0;
      if (!parse_host_port(client_connect, host, port)) {
        std::cerr << "bad --connect value: " << client_connect << "\n";
        return kExitConfig;
      }
      std::ifstream in(client_keys, std::ios::binary);
      if (!in.good()) {
        std::cerr << "cannot open key file: " << client_keys << "\n";
        return kExitConfig;
      }
      std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
      wire::MemoryStream key_stream;
      key_stream.write_all(bytes);
      auto msg = wire::recv_message(key_stream, params);
      auto* ki = std::get_if<wire::KeyIssue>(&msg);
      if (!ki) {
        std::cerr << "key file does not contain a KeyIssue message\n";
        return kExitConfig;
      }
      SchemeParams key_params = SchemeParams::from_profile(ki->params_profile);
      ccfg.key_seed = seed;
      ccfg.data_seed = seed + 1;
      ccfg.mode = fedsim::Mode::tcp;
      auto stream = wire::tcp_connect(host, port);
      auto w = fedsim::run_client(key_params, *ki, client_id, ccfg, *stream);
      std::printf("client %u finished %u rounds\n", client_id, ccfg.rounds);
      return kExitOk;
    }
  } catch (const ParamsError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bench::BenchError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fedsim::ProtocolAbort& e) {
    std::cerr << "protocol abort: " << e.what() << "\n";
    return kExitAbort;
  } catch (const wire::WireError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
