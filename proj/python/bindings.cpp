/**
 * @file bindings.cpp
 * @brief pybind11 module exposing the main operations: parameter setup,
 *        key dealing, encode/pack, encrypt/aggregate/decrypt, the round
 *        polynomial generator, traffic estimation, and the training demo.
 */
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "esafl/bench.hpp"
#include "esafl/codec.hpp"
#include "esafl/eshe.hpp"
#include "esafl/fedsim.hpp"
#include "esafl/params.hpp"
#include "esafl/prg.hpp"
#include "esafl/selftest.hpp"

namespace py = pybind11;
using namespace esafl;

namespace {

SchemeParams py_setup(uint32_t n, uint32_t log_q, uint32_t log_p,
                      uint32_t log_q0, uint32_t num_clients,
                      std::optional<uint32_t> pad,
                      std::optional<uint32_t> slots_T,
                      std::optional<uint32_t> ternary_weight,
                      std::optional<double> gaussian_sigma,
                      std::optional<uint32_t> seed_bits_k,
                      std::optional<uint32_t> reals_per_slot) {
  ParamOverrides ov;
  ov.pad = pad;
  ov.slots_T = slots_T;
  ov.ternary_weight = ternary_weight;
  ov.gaussian_sigma = gaussian_sigma;
  ov.seed_bits_k = seed_bits_k;
  ov.reals_per_slot = reals_per_slot;
  return setup(n, log_q, log_p, log_q0, num_clients, ov);
}

}  // namespace

PYBIND11_MODULE(_esafl, m) {
  m.doc() = "Additively homomorphic secure aggregation (C++ core)";

  py::register_exception<ParamsError>(m, "ParamsError", PyExc_ValueError);
  py::register_exception<CodecError>(m, "CodecError", PyExc_ValueError);
  py::register_exception<EsheError>(m, "EsheError", PyExc_ValueError);
  py::register_exception<fedsim::FedError>(m, "FedError", PyExc_ValueError);

  py::class_<SchemeParams>(m, "SchemeParams")
      .def_readonly("n", &SchemeParams::n)
      .def_readonly("log_q", &SchemeParams::log_q)
      .def_readonly("log_p", &SchemeParams::log_p)
      .def_readonly("log_q0", &SchemeParams::log_q0)
      .def_readonly("num_clients", &SchemeParams::num_clients)
      .def_readonly("ternary_weight", &SchemeParams::ternary_weight)
      .def_readonly("gaussian_sigma", &SchemeParams::gaussian_sigma)
      .def_readonly("pad", &SchemeParams::pad)
      .def_readonly("slots_T", &SchemeParams::slots_T)
      .def_readonly("seed_bits_k", &SchemeParams::seed_bits_k)
      .def_readonly("reals_per_slot", &SchemeParams::reals_per_slot)
      .def("capacity", &SchemeParams::capacity)
      .def("to_profile", &SchemeParams::to_profile)
      .def_static("from_profile", &SchemeParams::from_profile)
      .def("__eq__", [](const SchemeParams& a, const SchemeParams& b) {
        return a == b;
      });

  m.def("setup", &py_setup, py::arg("n"), py::arg("log_q") = 478,
        py::arg("log_p") = 460, py::arg("log_q0") = 16,
        py::arg("num_clients") = 9, py::arg("pad") = std::nullopt,
        py::arg("slots_T") = std::nullopt,
        py::arg("ternary_weight") = std::nullopt,
        py::arg("gaussian_sigma") = std::nullopt,
        py::arg("seed_bits_k") = std::nullopt,
        py::arg("reals_per_slot") = std::nullopt);
  m.def("desk_profile", &desk_profile);
  m.def("full_profile", &full_profile);

  py::class_<Rng>(m, "Rng").def(py::init<uint64_t>());

  py::class_<RingElem>(m, "RingElem")
      .def_property_readonly("n", &RingElem::n)
      .def_property_readonly("log_mod", &RingElem::log_mod)
      .def("serialize",
           [](const RingElem& e) {
             auto bytes = e.serialize();
             return py::bytes(reinterpret_cast<const char*>(bytes.data()),
                              bytes.size());
           })
      .def("__eq__",
           [](const RingElem& a, const RingElem& b) { return a == b; });

  py::class_<SparseTernaryKey>(m, "SparseTernaryKey")
      .def_property_readonly("weight", &SparseTernaryKey::weight);
  py::class_<SmallPoly>(m, "SmallPoly")
      .def_readonly("bound", &SmallPoly::bound);

  py::class_<KeyMaterial>(m, "KeyMaterial")
      .def_readonly("dec_key", &KeyMaterial::dec_key)
      .def_readonly("a0", &KeyMaterial::a0)
      .def_readonly("seed_b", &KeyMaterial::seed_b)
      .def("enc_key",
           [](const KeyMaterial& km, size_t i) {
             if (i >= km.enc_keys.size())
               throw py::index_error("client index out of range");
             return km.enc_keys[i];
           })
      .def_property_readonly("num_keys", [](const KeyMaterial& km) {
        return km.enc_keys.size();
      });

  m.def("keygen", &keygen, py::arg("params"), py::arg("rng"));
  m.def("prpg", &prpg, py::arg("t"), py::arg("b"), py::arg("params"));
  m.def("round_public", &round_public, py::arg("t"), py::arg("b"),
        py::arg("a0"), py::arg("params"));

  py::class_<PackedPlain>(m, "PackedPlain")
      .def("__eq__", [](const PackedPlain& a, const PackedPlain& b) {
        return a == b;
      });

  m.def(
      "ecd_pack",
      [](const std::vector<double>& g, const SchemeParams& p) {
        return ecd_pack(g, p);
      },
      py::arg("values"), py::arg("params"));
  m.def(
      "dcd_unpk",
      [](const std::vector<PackedPlain>& plains, uint32_t count, uint64_t L,
         const SchemeParams& p) { return dcd_unpk(plains, count, L, p); },
      py::arg("plains"), py::arg("count"), py::arg("length"),
      py::arg("params"));
  m.def(
      "ep_eval",
      [](const std::vector<std::vector<PackedPlain>>& inputs,
         const SchemeParams& p) { return ep_eval(inputs, p); },
      py::arg("inputs"), py::arg("params"));

  py::class_<Ciphertext>(m, "Ciphertext")
      .def_readonly("round", &Ciphertext::round)
      .def_readonly("agg_count", &Ciphertext::agg_count);

  m.def("encrypt", &encrypt, py::arg("a_t"), py::arg("round"), py::arg("key"),
        py::arg("plain"), py::arg("params"), py::arg("rng"));
  m.def(
      "eval_add",
      [](const std::vector<Ciphertext>& cts, const SchemeParams& p,
         bool allow_spanning) { return eval_add(cts, p, allow_spanning); },
      py::arg("cts"), py::arg("params"), py::arg("allow_spanning") = false);
  m.def("decrypt", &decrypt, py::arg("a_t"), py::arg("dec_key"), py::arg("ct"),
        py::arg("params"), py::arg("allow_partial") = false,
        py::arg("skip_noise_check") = false);
  m.def("noise_margin", &noise_margin, py::arg("params"));

  m.def(
      "normalize",
      [](const std::vector<double>& g, double c) {
        return fedsim::normalize(g, c);
      },
      py::arg("values"), py::arg("clip_bound"));
  m.def(
      "denormalize",
      [](const std::vector<double>& v, uint32_t count, double c) {
        return fedsim::denormalize(v, count, c);
      },
      py::arg("values"), py::arg("count"), py::arg("clip_bound"));

  py::class_<bench::EstimateReport>(m, "EstimateReport")
      .def_readonly("gradients", &bench::EstimateReport::gradients)
      .def_readonly("capacity", &bench::EstimateReport::capacity)
      .def_readonly("ciphertexts_packed",
                    &bench::EstimateReport::ciphertexts_packed)
      .def_readonly("ciphertexts_unpacked",
                    &bench::EstimateReport::ciphertexts_unpacked)
      .def_readonly("body_bytes_per_ciphertext",
                    &bench::EstimateReport::body_bytes_per_ciphertext)
      .def_readonly("uplink_bytes_per_round",
                    &bench::EstimateReport::uplink_bytes_per_round)
      .def_readonly("downlink_bytes_per_round",
                    &bench::EstimateReport::downlink_bytes_per_round)
      .def_readonly("plain_bytes", &bench::EstimateReport::plain_bytes);
  m.def("estimate", &bench::estimate, py::arg("gradients"), py::arg("params"));

  py::class_<fedsim::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("rounds", &fedsim::TrainConfig::rounds)
      .def_readwrite("learning_rate", &fedsim::TrainConfig::learning_rate)
      .def_readwrite("clip_bound", &fedsim::TrainConfig::clip_bound)
      .def_readwrite("model_dim", &fedsim::TrainConfig::model_dim)
      .def_readwrite("data_seed", &fedsim::TrainConfig::data_seed)
      .def_readwrite("data_noise", &fedsim::TrainConfig::data_noise)
      .def_readwrite("minibatch", &fedsim::TrainConfig::minibatch)
      .def_readwrite("key_seed", &fedsim::TrainConfig::key_seed);

  py::class_<fedsim::RoundTrace>(m, "RoundTrace")
      .def_readonly("round", &fedsim::RoundTrace::round)
      .def_readonly("loss_plain", &fedsim::RoundTrace::loss_plain)
      .def_readonly("loss_enc", &fedsim::RoundTrace::loss_enc)
      .def_readonly("max_model_diff", &fedsim::RoundTrace::max_model_diff)
      .def_readonly("uplink_bytes", &fedsim::RoundTrace::uplink_bytes)
      .def_readonly("downlink_bytes", &fedsim::RoundTrace::downlink_bytes)
      .def_readonly("agg_deviation", &fedsim::RoundTrace::agg_deviation);

  py::class_<fedsim::TrainResult>(m, "TrainResult")
      .def_readonly("rounds", &fedsim::TrainResult::rounds)
      .def_readonly("final_model", &fedsim::TrainResult::final_model)
      .def_readonly("plain_model", &fedsim::TrainResult::plain_model)
      .def_readonly("w_star", &fedsim::TrainResult::w_star)
      .def_readonly("aborted", &fedsim::TrainResult::aborted);

  m.def("run_training", &fedsim::run_training, py::arg("params"),
        py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("trace_to_csv", &fedsim::trace_to_csv, py::arg("result"));

  m.def(
      "selftest",
      [](const SchemeParams& p, uint32_t trials, const std::string& golden,
         uint64_t seed) {
        auto results = selftest::run_all(p, trials, golden, seed);
        std::vector<std::tuple<std::string, bool, bool, std::string>> out;
        for (const auto& r : results)
          out.emplace_back(r.name, r.passed, r.skipped, r.detail);
        return out;
      },
      py::arg("params"), py::arg("trials") = 50, py::arg("golden_dir") = "",
      py::arg("seed") = 1);
}
