#include "esafl/codec.hpp"

#include <cfenv>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace esafl {

namespace {

using cplx = std::complex<double>;

/// Per-dimension tables for the canonical embedding: twist factors, FFT
/// roots, bit-reversal permutation, and the 5^j slot ordering.
struct EmbeddingPlan {
  uint32_t n;
  std::vector<cplx> twist;        // zeta^k = exp(i pi k / n), k < n
  std::vector<cplx> roots;        // exp(+2 pi i k / n), k < n/2
  std::vector<uint32_t> bitrev;   // permutation for size-n FFT
  std::vector<uint32_t> slot_at;  // slot j -> spectrum index (5^j - 1)/2

  explicit EmbeddingPlan(uint32_t n_in) : n(n_in) {
    const double pi = std::numbers::pi;
    twist.resize(n);
    for (uint32_t k = 0; k < n; ++k)
      twist[k] = std::polar(1.0, pi * double(k) / double(n));
    roots.resize(n / 2);
    for (uint32_t k = 0; k < n / 2; ++k)
      roots[k] = std::polar(1.0, 2.0 * pi * double(k) / double(n));
    bitrev.resize(n);
    uint32_t log_n = 0;
    while ((1u << log_n) < n) ++log_n;
    for (uint32_t i = 0; i < n; ++i) {
      uint32_t r = 0;
      for (uint32_t b = 0; b < log_n; ++b) r |= ((i >> b) & 1u) << (log_n - 1 - b);
      bitrev[i] = r;
    }
    slot_at.resize(n / 2);
    uint64_t two_n = uint64_t(n) * 2;
    uint64_t pow5 = 1;
    for (uint32_t j = 0; j < n / 2; ++j) {
      slot_at[j] = uint32_t((pow5 - 1) / 2);
      pow5 = (pow5 * 5) % two_n;
    }
  }

  // In-place radix-2 FFT. Forward computes V_m = sum_k v_k e^{+2 pi i km/n};
  // inverse applies the conjugate transform and the 1/n scale.
  void fft(std::vector<cplx>& a, bool inverse) const {
    for (uint32_t i = 0; i < n; ++i)
      if (i < bitrev[i]) std::swap(a[i], a[bitrev[i]]);
    for (uint32_t len = 2; len <= n; len <<= 1) {
      uint32_t half = len >> 1;
      uint32_t step = n / len;
      for (uint32_t start = 0; start < n; start += len) {
        for (uint32_t k = 0; k < half; ++k) {
          cplx w = roots[size_t(k) * step];
          if (inverse) w = std::conj(w);
          cplx u = a[start + k];
          cplx v = a[start + k + half] * w;
          a[start + k] = u + v;
          a[start + k + half] = u - v;
        }
      }
    }
    if (inverse) {
      double inv_n = 1.0 / double(n);
      for (auto& x : a) x *= inv_n;
    }
  }
};

const EmbeddingPlan& plan_for(uint32_t n) {
  static std::mutex mu;
  static std::map<uint32_t, std::unique_ptr<EmbeddingPlan>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<EmbeddingPlan>(n);
  return *slot;
}

// Builds the complex slot vector from reals under the reals_per_slot policy.
std::vector<cplx> slots_from_reals(std::span<const double> chunk,
                                   const SchemeParams& p) {
  uint32_t half = p.n / 2;
  std::vector<cplx> z(half, cplx(0.0, 0.0));
  if (p.reals_per_slot == 1) {
    for (size_t j = 0; j < chunk.size(); ++j) z[j] = cplx(chunk[j], 0.0);
  } else {
    for (size_t j = 0; j < chunk.size(); ++j) {
      if (j < half)
        z[j] += cplx(chunk[j], 0.0);
      else
        z[j - half] += cplx(0.0, chunk[j]);
    }
  }
  return z;
}

void reals_from_slots(const std::vector<cplx>& z, const SchemeParams& p,
                      std::vector<double>& out) {
  uint32_t half = p.n / 2;
  if (p.reals_per_slot == 1) {
    out.resize(half);
    for (uint32_t j = 0; j < half; ++j) out[j] = z[j].real();
  } else {
    out.resize(p.n);
    for (uint32_t j = 0; j < half; ++j) {
      out[j] = z[j].real();
      out[j + half] = z[j].imag();
    }
  }
}

void put_field(std::span<uint64_t> limbs, uint32_t bit_offset, uint32_t width,
               uint64_t value) {
  uint32_t li = bit_offset / 64;
  uint32_t sh = bit_offset % 64;
  unsigned __int128 v = (unsigned __int128)value << sh;
  limbs[li] |= uint64_t(v);
  if (sh + width > 64) limbs[li + 1] |= uint64_t(v >> 64);
}

uint64_t get_field(std::span<const uint64_t> limbs, uint32_t bit_offset,
                   uint32_t width) {
  uint32_t li = bit_offset / 64;
  uint32_t sh = bit_offset % 64;
  unsigned __int128 v = limbs[li];
  if (li + 1 < limbs.size()) v |= (unsigned __int128)limbs[li + 1] << 64;
  uint64_t mask = width == 64 ? ~uint64_t(0) : ((uint64_t(1) << width) - 1);
  return uint64_t(v >> sh) & mask;
}

}  // namespace

double codec_delta(const SchemeParams& params) {
  return std::ldexp(1.0, int(params.log_q0) - 2);
}

int64_t codec_offset(const SchemeParams& params) {
  return int64_t(1) << (params.log_q0 - 1);
}

double roundtrip_error_bound(const SchemeParams& params, uint32_t count) {
  return double(count) * double(params.n) / (2.0 * codec_delta(params));
}

EncodedPoly encode(std::span<const double> chunk, const SchemeParams& params) {
  if (chunk.size() > params.reals_per_poly())
    throw CodecError("encode: chunk longer than the slot capacity");
  for (double v : chunk) {
    if (!std::isfinite(v)) throw CodecError("encode: non-finite input");
    if (v < 0.0 || v > 1.0)
      throw CodecError("encode: input outside [0,1]");
  }
  const EmbeddingPlan& plan = plan_for(params.n);
  std::vector<cplx> z = slots_from_reals(chunk, params);

  // Full spectrum over the n odd roots: slot values plus their conjugates.
  std::vector<cplx> spec(params.n, cplx(0.0, 0.0));
  uint32_t half = params.n / 2;
  for (uint32_t j = 0; j < half; ++j) {
    uint32_t m = plan.slot_at[j];
    spec[m] = z[j];
    spec[params.n - 1 - m] = std::conj(z[j]);
  }
  plan.fft(spec, /*inverse=*/true);

  double delta = codec_delta(params);
  int64_t offset = codec_offset(params);
  int64_t limit = int64_t(1) << params.log_q0;
  EncodedPoly out;
  out.delta = delta;
  out.coeffs.resize(params.n);
  for (uint32_t k = 0; k < params.n; ++k) {
    double coeff = (spec[k] * std::conj(plan.twist[k])).real();
    double scaled = delta * coeff;
    // nearbyint under the default rounding mode is round-half-to-even
    int64_t r = int64_t(std::nearbyint(scaled)) + offset;
    if (r < 0 || r >= limit)
      throw CodecError("encode: coefficient escaped the slot width");
    out.coeffs[k] = uint64_t(r);
  }
  return out;
}

std::vector<double> decode(const EncodedPoly& poly, uint32_t count,
                           const SchemeParams& params) {
  if (count == 0) throw CodecError("decode: count must be >= 1");
  if (count > (uint64_t(1) << params.pad))
    throw CodecError("decode: count exceeds the 2^pad carry headroom");
  if (poly.coeffs.size() != params.n)
    throw CodecError("decode: wrong coefficient count");
  uint64_t field_limit = uint64_t(count) << params.log_q0;
  int64_t shift = int64_t(count) * codec_offset(params);
  double delta = codec_delta(params);
  const EmbeddingPlan& plan = plan_for(params.n);

  std::vector<cplx> spec(params.n);
  for (uint32_t k = 0; k < params.n; ++k) {
    uint64_t f = poly.coeffs[k];
    if (f >= field_limit)
      throw CodecError(
          "decode: slot value exceeds the width reachable by `count` "
          "summands (aggregation overflow or wrong count)");
    double x = double(int64_t(f) - shift) / delta;
    spec[k] = cplx(x, 0.0) * plan.twist[k];
  }
  plan.fft(spec, /*inverse=*/false);

  uint32_t half = params.n / 2;
  std::vector<cplx> z(half);
  for (uint32_t j = 0; j < half; ++j) z[j] = spec[plan.slot_at[j]];
  std::vector<double> out;
  reals_from_slots(z, params, out);
  return out;
}

PackedPlain pack(std::span<const EncodedPoly> polys,
                 const SchemeParams& params) {
  if (polys.size() != params.slots_T - 1)
    throw CodecError("pack: expected exactly T-1 encoded polynomials");
  uint64_t limit = uint64_t(1) << params.log_q0;
  uint32_t w = params.slot_width();
  PackedPlain out;
  out.poly = RingElem(params.n, params.log_p);
  out.slots_T = params.slots_T;
  out.pad = params.pad;
  out.log_q0 = params.log_q0;
  uint32_t nl = out.poly.limbs();
  std::vector<uint64_t> limbs(nl);
  for (uint32_t j = 0; j < params.n; ++j) {
    std::fill(limbs.begin(), limbs.end(), 0);
    for (uint32_t i = 1; i < params.slots_T; ++i) {  // slot i holds poly i-1
      const EncodedPoly& p = polys[i - 1];
      if (p.coeffs.size() != params.n)
        throw CodecError("pack: wrong coefficient count");
      uint64_t v = p.coeffs[j];
      if (v >= limit) throw CodecError("pack: coefficient overflow");
      put_field(limbs, w * (params.slots_T - i), w, v);
    }
    out.poly.set_coeff(j, limbs);
  }
  return out;
}

std::vector<EncodedPoly> unpack(const PackedPlain& packed,
                                const SchemeParams& params) {
  if (!packed.geometry_matches(params))
    throw CodecError("unpack: slot geometry mismatch");
  uint32_t w = params.slot_width();
  std::vector<EncodedPoly> out(params.slots_T);
  for (auto& p : out) {
    p.coeffs.resize(params.n);
    p.delta = codec_delta(params);
  }
  for (uint32_t j = 0; j < params.n; ++j) {
    auto limbs = packed.poly.coeff(j);
    for (uint32_t i = 1; i <= params.slots_T; ++i)
      out[i - 1].coeffs[j] = get_field(limbs, w * (params.slots_T - i), w);
  }
  return out;
}

std::vector<PackedPlain> ecd_pack(std::span<const double> g,
                                  const SchemeParams& params) {
  uint64_t rp = params.reals_per_poly();
  uint32_t batch = params.slots_T - 1;
  std::vector<PackedPlain> out;
  if (g.empty()) return out;
  uint64_t num_chunks = (g.size() + rp - 1) / rp;
  uint64_t num_batches = (num_chunks + batch - 1) / batch;
  out.reserve(num_batches);
  std::vector<EncodedPoly> group;
  group.reserve(batch);
  EncodedPoly zero_poly;
  zero_poly.coeffs.assign(params.n, 0);
  zero_poly.delta = codec_delta(params);
  for (uint64_t c = 0; c < num_batches * batch; ++c) {
    if (c < num_chunks) {
      uint64_t begin = c * rp;
      uint64_t len = std::min<uint64_t>(rp, g.size() - begin);
      group.push_back(encode(g.subspan(begin, len), params));
    } else {
      group.push_back(zero_poly);
    }
    if (group.size() == batch) {
      out.push_back(pack(group, params));
      group.clear();
    }
  }
  return out;
}

std::vector<double> dcd_unpk(std::span<const PackedPlain> plains,
                             uint32_t count, uint64_t L,
                             const SchemeParams& params) {
  if (L > plains.size() * params.capacity())
    throw CodecError("dcd_unpk: declared length exceeds available capacity");
  std::vector<double> out;
  out.reserve(L);
  for (const PackedPlain& plain : plains) {
    if (out.size() >= L) break;
    std::vector<EncodedPoly> polys = unpack(plain, params);
    for (uint32_t i = 0; i + 1 < params.slots_T && out.size() < L; ++i) {
      std::vector<double> vals = decode(polys[i], count, params);
      for (double v : vals) {
        if (out.size() >= L) break;
        out.push_back(v);
      }
    }
  }
  if (out.size() != L)
    throw CodecError("dcd_unpk: declared length exceeds available capacity");
  return out;
}

std::vector<PackedPlain> ep_eval(
    std::span<const std::vector<PackedPlain>> inputs,
    const SchemeParams& params) {
  if (inputs.empty()) throw CodecError("ep_eval: no inputs");
  if (inputs.size() > (uint64_t(1) << params.pad))
    throw CodecError("ep_eval: more than 2^pad summands risks slot carries");
  size_t len = inputs.front().size();
  for (const auto& seq : inputs)
    if (seq.size() != len) throw CodecError("ep_eval: length mismatch");
  std::vector<PackedPlain> out;
  out.reserve(len);
  for (size_t k = 0; k < len; ++k) {
    PackedPlain acc = inputs[0][k];
    if (!acc.geometry_matches(params))
      throw CodecError("ep_eval: slot geometry mismatch");
    for (size_t i = 1; i < inputs.size(); ++i) {
      if (!inputs[i][k].geometry_matches(params))
        throw CodecError("ep_eval: slot geometry mismatch");
      acc.poly = add(acc.poly, inputs[i][k].poly);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

}  // namespace esafl
