// Developer tool: regenerates the golden fixture files under tests/golden.
// Run manually from the repo root after any intentional format change; the
// checked-in fixtures pin the normative byte formats.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "esafl/codec.hpp"
#include "esafl/eshe.hpp"
#include "esafl/params.hpp"
#include "esafl/prg.hpp"
#include "esafl/wire.hpp"

using namespace esafl;

namespace {

std::string coeff_hex(const RingElem& a, uint32_t i) {
  auto limbs = a.coeff(i);
  std::string out;
  char buf[17];
  for (size_t l = limbs.size(); l-- > 0;) {
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(limbs[l]));
    out += buf;
  }
  // strip leading zeros but keep at least one digit
  size_t pos = out.find_first_not_of('0');
  return pos == std::string::npos ? "0" : out.substr(pos);
}

void write_prpg_golden(const std::string& dir) {
  ParamOverrides ov;
  ov.ternary_weight = 8;
  SchemeParams p = setup(16, 478, 460, 16, 9, ov);
  const uint64_t B = 0x0123456789abcdefull;
  RingElem a = prpg(5, B, p);
  {
    std::ofstream out(dir + "/prpg_n16_t5.txt");
    out << "# a^t coefficients as hex integers; n=16 log_q=478 t=5 "
           "B=0x0123456789abcdef\n";
    for (uint32_t i = 0; i < 16; ++i) out << coeff_hex(a, i) << "\n";
  }
  {
    std::ofstream out(dir + "/prpg_n16_t5.bin", std::ios::binary);
    auto bytes = a.serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
  }
  std::ofstream prof(dir + "/n16.profile");
  prof << p.to_profile();
}

void write_codec_golden(const std::string& dir) {
  ParamOverrides ov;
  ov.ternary_weight = 8;
  SchemeParams p = setup(8, 478, 460, 16, 9, ov);
  std::vector<double> inputs = {0.25, 1.0, 0.0, 0.625};
  EncodedPoly e = encode(inputs, p);
  std::ofstream out(dir + "/codec_encode_n8.txt");
  out << "# four inputs then eight offset-coded coefficients; n=8 log_q0=16 "
         "Delta=2^14\n";
  out.precision(17);
  for (double v : inputs) out << v << "\n";
  for (uint64_t c : e.coeffs) out << c << "\n";
}

// slot-field concatenation vectors: one case per line,
// log_q0 pad T alpha_1..alpha_{T-1} beta(hex)
void write_pack_golden(const std::string& dir) {
  std::ofstream out(dir + "/pack_fields.txt");
  out << "# log_q0 pad T alpha_1..alpha_{T-1} beta_hex\n";
  Rng rng(77);
  struct Geometry {
    uint32_t log_q0, pad, T, n_clients;
  };
  for (Geometry g : {Geometry{4, 2, 3, 3}, Geometry{16, 4, 23, 9},
                     Geometry{8, 1, 12, 2}}) {
    ParamOverrides ov;
    ov.ternary_weight = 4;
    ov.pad = g.pad;
    ov.slots_T = g.T;
    SchemeParams p = setup(4, 478, 460, g.log_q0, g.n_clients, ov);
    std::vector<EncodedPoly> polys(g.T - 1);
    for (auto& q : polys) {
      q.coeffs.assign(4, 0);
      q.coeffs[0] = rng.below(uint64_t(1) << g.log_q0);
    }
    PackedPlain packed = pack(polys, p);
    out << g.log_q0 << " " << g.pad << " " << g.T;
    for (const auto& q : polys) out << " " << q.coeffs[0];
    out << " " << coeff_hex(packed.poly, 0) << "\n";
  }
  // the worked bit-layout example: fields 10 and 3 at width 6 give 41152
  {
    ParamOverrides ov;
    ov.ternary_weight = 4;
    ov.pad = 2;
    ov.slots_T = 3;
    SchemeParams p = setup(4, 478, 460, 4, 3, ov);
    std::vector<EncodedPoly> polys(2);
    for (auto& q : polys) q.coeffs.assign(4, 0);
    polys[0].coeffs[0] = 10;
    polys[1].coeffs[0] = 3;
    out << "4 2 3 10 3 " << coeff_hex(pack(polys, p).poly, 0) << "\n";
  }
}

void dump_frame(const std::string& path, const wire::ProtocolMessage& msg) {
  wire::MemoryStream s;
  wire::send_message(s, msg);
  std::vector<uint8_t> bytes(s.pending());
  s.read_some(bytes);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
}

void write_wire_golden(const std::string& dir) {
  ParamOverrides ov;
  ov.ternary_weight = 4;
  SchemeParams p = setup(4, 478, 460, 16, 9, ov);
  Rng rng(123);

  wire::KeyIssue ki;
  ki.params_profile = p.to_profile();
  ki.enc_key = sample_ternary(rng, p.n, p.ternary_weight);
  SparseTernaryKey other = sample_ternary(rng, p.n, p.ternary_weight);
  SparseTernaryKey keys[] = {ki.enc_key, other};
  ki.dec_key = key_sum(keys);
  ki.a0 = RingElem::uniform(p.n, p.log_q, rng);
  ki.seed_b = 0x1122334455667788ull;
  dump_frame(dir + "/wire_keyissue.bin", ki);

  wire::RoundSubmit rs;
  rs.round = 7;
  rs.client_id = 3;
  rs.original_length = 6;
  Ciphertext ct;
  ct.body = RingElem::uniform(p.n, p.log_q, rng);
  ct.round = 7;
  ct.agg_count = 1;
  rs.cts.push_back(ct);
  dump_frame(dir + "/wire_roundsubmit.bin", rs);

  wire::RoundResult rr;
  rr.round = 7;
  rr.agg_count = 9;
  rr.original_length = 6;
  Ciphertext agg;
  agg.body = RingElem::uniform(p.n, p.log_q, rng);
  agg.round = 7;
  agg.agg_count = 9;
  rr.cts.push_back(agg);
  dump_frame(dir + "/wire_roundresult.bin", rr);

  dump_frame(dir + "/wire_abort.bin",
             wire::Abort{wire::AbortReason::barrier_timeout});
}

}  // namespace

int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "tests/golden";
  write_prpg_golden(dir);
  write_codec_golden(dir);
  write_pack_golden(dir);
  write_wire_golden(dir);
  std::cout << "golden fixtures written to " << dir << "\n";
  return 0;
}
