#include "esafl/params.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace esafl {

namespace {

uint32_t ceil_log2(uint64_t v) {
  uint32_t b = 0;
  while ((uint64_t(1) << b) < v) ++b;
  return b;
}

}  // namespace

uint32_t SchemeParams::error_bound() const {
  return uint32_t(std::ceil(6.0 * gaussian_sigma));
}

void SchemeParams::validate() const {
  if (n < 4 || !std::has_single_bit(n))
    throw ParamsError("params: n must be a power of two >= 4");
  if (log_q == 0 || log_q > 4096)
    throw ParamsError("params: log_q out of range");
  if (log_p == 0 || log_p >= log_q)
    throw ParamsError("params: requires log_p < log_q");
  if (log_q0 < 2 || log_q0 > 52)
    throw ParamsError("params: log_q0 must be in [2, 52]");
  if (num_clients < 2)
    throw ParamsError("params: num_clients must be >= 2");
  if (num_clients > 65535)
    throw ParamsError("params: num_clients exceeds the 16-bit aggregate count");
  if (pad < ceil_log2(num_clients))
    throw ParamsError("params: pad below ceil(log2(num_clients)) carry bound");
  if (slots_T < 2)
    throw ParamsError(
        "params: slots_T must be >= 2 (one data slot plus the zero slot)");
  if (uint64_t(slots_T) * slot_width() > log_p)
    throw ParamsError("params: slots_T * (pad + log_q0) exceeds log_p");
  if (slot_width() > 62)
    throw ParamsError("params: slot width pad + log_q0 exceeds 62 bits");
  if (ternary_weight == 0 || ternary_weight > n)
    throw ParamsError("params: ternary_weight must be in [1, n]");
  if (!(gaussian_sigma > 0.0) || !std::isfinite(gaussian_sigma))
    throw ParamsError("params: gaussian_sigma must be positive and finite");
  // Noise must never overflow the q/p headroom: N * ceil(6 sigma) < 2^(log_q - log_p).
  uint32_t headroom = log_q - log_p;
  if (headroom < 63) {
    uint64_t total_noise = uint64_t(num_clients) * error_bound();
    if (total_noise >= (uint64_t(1) << headroom))
      throw ParamsError(
          "params: num_clients * ceil(6*sigma) overflows the q/p headroom");
  }
  if (seed_bits_k == 0 || seed_bits_k > 64)
    throw ParamsError("params: seed_bits_k must be in [1, 64]");
  if (reals_per_slot != 1 && reals_per_slot != 2)
    throw ParamsError("params: reals_per_slot must be 1 or 2");
}

SchemeParams setup(uint32_t n, uint32_t log_q, uint32_t log_p, uint32_t log_q0,
                   uint32_t num_clients, const ParamOverrides& ov) {
  SchemeParams p;
  p.n = n;
  p.log_q = log_q;
  p.log_p = log_p;
  p.log_q0 = log_q0;
  p.num_clients = num_clients;
  if (ov.ternary_weight) p.ternary_weight = *ov.ternary_weight;
  if (ov.gaussian_sigma) p.gaussian_sigma = *ov.gaussian_sigma;
  if (ov.seed_bits_k) p.seed_bits_k = *ov.seed_bits_k;
  if (ov.reals_per_slot) p.reals_per_slot = *ov.reals_per_slot;
  p.pad = ov.pad ? *ov.pad : ceil_log2(num_clients);
  if (ov.slots_T) {
    p.slots_T = *ov.slots_T;
  } else {
    uint64_t width = uint64_t(log_q0) + p.pad;
    p.slots_T = uint32_t(log_p / width);
  }
  p.validate();
  return p;
}

SchemeParams desk_profile() {
  return setup(1u << 10, 478, 460, 16, 9);
}

SchemeParams full_profile() {
  return setup(1u << 15, 478, 460, 16, 9);
}

std::string SchemeParams::to_profile() const {
  char sigma_buf[64];
  std::snprintf(sigma_buf, sizeof(sigma_buf), "%.17g", gaussian_sigma);
  std::ostringstream os;
  os << "n=" << n << "\n"
     << "log_q=" << log_q << "\n"
     << "log_p=" << log_p << "\n"
     << "log_q0=" << log_q0 << "\n"
     << "num_clients=" << num_clients << "\n"
     << "ternary_weight=" << ternary_weight << "\n"
     << "gaussian_sigma=" << sigma_buf << "\n"
     << "pad=" << pad << "\n"
     << "slots_T=" << slots_T << "\n"
     << "seed_bits_k=" << seed_bits_k << "\n"
     << "reals_per_slot=" << reals_per_slot << "\n";
  return os.str();
}

SchemeParams SchemeParams::from_profile(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParamsError("profile: missing '=' on line " + std::to_string(lineno));
    std::string key = line.substr(0, eq);
    if (!kv.emplace(key, line.substr(eq + 1)).second)
      throw ParamsError("profile: duplicate key '" + key + "'");
  }

  auto take_u32 = [&kv](const char* key) -> std::optional<uint32_t> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    unsigned long v = 0;
    size_t pos = 0;
    try {
      v = std::stoul(it->second, &pos);
    } catch (const std::exception&) {
      throw ParamsError(std::string("profile: bad integer for ") + key);
    }
    if (pos != it->second.size() || v > 0xffffffffull)
      throw ParamsError(std::string("profile: bad integer for ") + key);
    kv.erase(it);
    return uint32_t(v);
  };
  auto take_f64 = [&kv](const char* key) -> std::optional<double> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(it->second, &pos);
    } catch (const std::exception&) {
      throw ParamsError(std::string("profile: bad number for ") + key);
    }
    if (pos != it->second.size())
      throw ParamsError(std::string("profile: bad number for ") + key);
    kv.erase(it);
    return v;
  };

  SchemeParams defaults;
  uint32_t n = take_u32("n").value_or(defaults.n);
  uint32_t log_q = take_u32("log_q").value_or(defaults.log_q);
  uint32_t log_p = take_u32("log_p").value_or(defaults.log_p);
  uint32_t log_q0 = take_u32("log_q0").value_or(defaults.log_q0);
  uint32_t num_clients = take_u32("num_clients").value_or(defaults.num_clients);
  ParamOverrides ov;
  ov.ternary_weight = take_u32("ternary_weight");
  ov.gaussian_sigma = take_f64("gaussian_sigma");
  ov.pad = take_u32("pad");
  ov.slots_T = take_u32("slots_T");
  ov.seed_bits_k = take_u32("seed_bits_k");
  ov.reals_per_slot = take_u32("reals_per_slot");
  if (!kv.empty())
    throw ParamsError("profile: unknown key '" + kv.begin()->first + "'");
  return setup(n, log_q, log_p, log_q0, num_clients, ov);
}

}  // namespace esafl
