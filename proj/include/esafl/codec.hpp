/**
 * @file codec.hpp
 * @brief Bidirectional pipeline between real-valued vectors in [0,1] and
 *        packed plaintext polynomials in R_p.
 *
 * Encoding evaluates the inverse canonical embedding for X^n+1 (slots at the
 * primitive 2n-th roots zeta^(5^j), j = 0..n/2-1, conjugate pairs implied),
 * scales by Delta = 2^(log_q0-2), rounds half-to-even, and offset-codes each
 * signed coefficient by 2^(log_q0-1) so slot fields are non-negative.
 * Packing concatenates T-1 encoded polynomials plus a zero slot into each
 * coefficient, pad zero bits above every field absorbing addition carries.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esafl/params.hpp"
#include "esafl/ring.hpp"

namespace esafl {

struct CodecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Offset-coded integral coefficients; each < 2^log_q0 at encode time, up to
/// count * 2^log_q0 after slot-wise aggregation.
struct EncodedPoly {
  std::vector<uint64_t> coeffs;
  double delta = 0.0;  ///< scaling factor used

  bool operator==(const EncodedPoly&) const = default;
};

/// Plaintext polynomial in R_p whose coefficients are bit-concatenations of
/// T slots of (pad + log_q0)-bit fields; slot 1 highest, slot T zero.
struct PackedPlain {
  RingElem poly;  // modulus descriptor (n, log_p)
  uint32_t slots_T = 0;
  uint32_t pad = 0;
  uint32_t log_q0 = 0;

  bool operator==(const PackedPlain&) const = default;
  bool geometry_matches(const SchemeParams& p) const {
    return slots_T == p.slots_T && pad == p.pad && log_q0 == p.log_q0 &&
           poly.n() == p.n && poly.log_mod() == p.log_p;
  }
};

/// Scaling factor Delta = 2^(log_q0 - 2).
double codec_delta(const SchemeParams& params);
/// Slot offset 2^(log_q0 - 1) removed at decode using the aggregation count.
int64_t codec_offset(const SchemeParams& params);
/// Rigorous worst-case |decode(sum of count encodes) - true sum| bound,
/// count * n / (2 * Delta).
double roundtrip_error_bound(const SchemeParams& params, uint32_t count);

/// Encodes up to reals_per_poly() values in [0,1] (zero-padded) into an
/// offset-coded integral polynomial.
EncodedPoly encode(std::span<const double> chunk, const SchemeParams& params);

/// Inverse of encode for an aggregate of `count` summands; returns
/// reals_per_poly() values. Rejects fields that cannot arise from `count`
/// valid summands (aggregation overflow / wrong count).
std::vector<double> decode(const EncodedPoly& poly, uint32_t count,
                           const SchemeParams& params);

/// Packs exactly T-1 encoded polynomials into one plaintext polynomial.
PackedPlain pack(std::span<const EncodedPoly> polys,
                 const SchemeParams& params);

/// Splits a packed polynomial into all T slot fields (callers discard the
/// T-th). Post-aggregation widths up to pad + log_q0 bits are allowed.
std::vector<EncodedPoly> unpack(const PackedPlain& packed,
                                const SchemeParams& params);

/// Full pipeline: chunk, encode, batch, pack. Output size is
/// ceil(g.size() / capacity()).
std::vector<PackedPlain> ecd_pack(std::span<const double> g,
                                  const SchemeParams& params);

/// Inverse pipeline for an aggregate of `count` contributions; returns
/// exactly L values.
std::vector<double> dcd_unpk(std::span<const PackedPlain> plains,
                             uint32_t count, uint64_t L,
                             const SchemeParams& params);

/// Position-wise plaintext aggregation in R_p (test surface mirroring the
/// ciphertext-domain sum). Requires inputs.size() <= 2^pad.
std::vector<PackedPlain> ep_eval(
    std::span<const std::vector<PackedPlain>> inputs,
    const SchemeParams& params);

}  // namespace esafl
