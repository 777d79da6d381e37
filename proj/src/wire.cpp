#include "esafl/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace esafl::wire {

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<uint8_t>& out) : out_(out) {}
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    out_.push_back(uint8_t(v));
    out_.push_back(uint8_t(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(uint8_t(v >> (8 * i)));
  }
  void i32(int32_t v) { u32(uint32_t(v)); }
  void bytes(std::span<const uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void str(const std::string& s) {
    u32(uint32_t(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }

 private:
  std::vector<uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}
  size_t remaining() const { return in_.size() - pos_; }
  void need(size_t n) const {
    if (remaining() < n)
      throw WireError(ErrorCode::bad_payload, "wire: payload too short");
  }
  uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(in_[pos_]) | uint16_t(uint16_t(in_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(in_[pos_ + size_t(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(in_[pos_ + size_t(i)]) << (8 * i);
    pos_ += 8;
    return v;
  }
  int32_t i32() { return int32_t(u32()); }
  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    uint32_t len = u32();
    auto b = bytes(len);
    return std::string(b.begin(), b.end());
  }
  void expect_end() const {
    if (remaining() != 0)
      throw WireError(ErrorCode::bad_payload, "wire: trailing bytes");
  }

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

void write_ternary_key(ByteWriter& w, const SparseTernaryKey& k) {
  w.u32(k.n);
  w.u32(uint32_t(k.plus.size()));
  w.u32(uint32_t(k.minus.size()));
  for (uint32_t i : k.plus) w.u32(i);
  for (uint32_t i : k.minus) w.u32(i);
}

SparseTernaryKey read_ternary_key(ByteReader& r) {
  SparseTernaryKey k;
  k.n = r.u32();
  uint32_t np = r.u32();
  uint32_t nm = r.u32();
  if (uint64_t(np) + nm > k.n)
    throw WireError(ErrorCode::bad_payload, "wire: key weight exceeds n");
  auto read_sorted = [&r, &k](uint32_t count, std::vector<uint32_t>& dst) {
    dst.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
      uint32_t v = r.u32();
      if (v >= k.n || (!dst.empty() && v <= dst.back()))
        throw WireError(ErrorCode::bad_payload, "wire: bad key index order");
      dst.push_back(v);
    }
  };
  read_sorted(np, k.plus);
  read_sorted(nm, k.minus);
  // disjointness of the two sorted sets
  size_t a = 0, b = 0;
  while (a < k.plus.size() && b < k.minus.size()) {
    if (k.plus[a] == k.minus[b])
      throw WireError(ErrorCode::bad_payload, "wire: overlapping key indices");
    if (k.plus[a] < k.minus[b])
      ++a;
    else
      ++b;
  }
  return k;
}

void write_small_poly(ByteWriter& w, const SmallPoly& s) {
  w.u32(s.n());
  w.i32(int32_t(s.bound));
  for (int64_t c : s.coeffs) w.i32(int32_t(c));
}

SmallPoly read_small_poly(ByteReader& r) {
  SmallPoly s;
  uint32_t n = r.u32();
  s.bound = r.i32();
  if (s.bound < 0)
    throw WireError(ErrorCode::bad_payload, "wire: negative bound");
  r.need(size_t(n) * 4);
  s.coeffs.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    int64_t c = r.i32();
    if (c > s.bound || c < -s.bound)
      throw WireError(ErrorCode::bad_payload, "wire: coefficient over bound");
    s.coeffs.push_back(c);
  }
  return s;
}

void write_ciphertexts(ByteWriter& w, const std::vector<Ciphertext>& cts,
                       std::vector<uint8_t>& out) {
  w.u16(uint16_t(cts.size()));
  for (const Ciphertext& ct : cts) serialize_ciphertext(ct, out);
}

std::vector<Ciphertext> read_ciphertexts(ByteReader& r,
                                         const SchemeParams& params) {
  uint16_t count = r.u16();
  size_t each = ciphertext_wire_size(params);
  r.need(size_t(count) * each);
  std::vector<Ciphertext> cts;
  cts.reserve(count);
  for (uint16_t i = 0; i < count; ++i)
    cts.push_back(deserialize_ciphertext(r.bytes(each), params));
  return cts;
}

}  // namespace

MsgType type_of(const ProtocolMessage& msg) {
  if (std::holds_alternative<KeyIssue>(msg)) return MsgType::key_issue;
  if (std::holds_alternative<RoundSubmit>(msg)) return MsgType::round_submit;
  if (std::holds_alternative<RoundResult>(msg)) return MsgType::round_result;
  return MsgType::abort_run;
}

std::vector<uint8_t> serialize(const ProtocolMessage& msg) {
  std::vector<uint8_t> out;
  ByteWriter w(out);
  if (const auto* ki = std::get_if<KeyIssue>(&msg)) {
    w.str(ki->params_profile);
    write_ternary_key(w, ki->enc_key);
    write_small_poly(w, ki->dec_key);
    ki->a0.serialize_to(out);
    w.u64(ki->seed_b);
  } else if (const auto* rs = std::get_if<RoundSubmit>(&msg)) {
    w.u64(rs->round);
    w.u32(rs->client_id);
    w.u64(rs->original_length);
    write_ciphertexts(w, rs->cts, out);
  } else if (const auto* rr = std::get_if<RoundResult>(&msg)) {
    w.u64(rr->round);
    w.u16(rr->agg_count);
    w.u64(rr->original_length);
    write_ciphertexts(w, rr->cts, out);
  } else {
    w.u32(uint32_t(std::get<Abort>(msg).reason));
  }
  return out;
}

size_t framed_size(const ProtocolMessage& msg, const SchemeParams& params) {
  size_t header = 5;
  size_t ct = ciphertext_wire_size(params);
  if (const auto* ki = std::get_if<KeyIssue>(&msg)) {
    return header + 4 + ki->params_profile.size() + 12 +
           4 * (ki->enc_key.plus.size() + ki->enc_key.minus.size()) + 8 +
           4 * ki->dec_key.coeffs.size() + ki->a0.serialized_size() + 8;
  }
  if (const auto* rs = std::get_if<RoundSubmit>(&msg))
    return header + 8 + 4 + 8 + 2 + rs->cts.size() * ct;
  if (const auto* rr = std::get_if<RoundResult>(&msg))
    return header + 8 + 2 + 8 + 2 + rr->cts.size() * ct;
  return header + 4;
}

ProtocolMessage deserialize(MsgType type, std::span<const uint8_t> payload,
                            const SchemeParams& params) {
  ByteReader r(payload);
  switch (type) {
    case MsgType::key_issue: {
      KeyIssue ki;
      ki.params_profile = r.str();
      SchemeParams own;
      try {
        own = SchemeParams::from_profile(ki.params_profile);
      } catch (const ParamsError& e) {
        throw WireError(ErrorCode::bad_payload,
                        std::string("wire: bad embedded profile: ") + e.what());
      }
      ki.enc_key = read_ternary_key(r);
      ki.dec_key = read_small_poly(r);
      size_t a0_bytes = size_t(own.n) * SchemeParams::coeff_bytes(own.log_q);
      try {
        ki.a0 = RingElem::deserialize(r.bytes(a0_bytes), own.n, own.log_q);
      } catch (const RingError& e) {
        throw WireError(ErrorCode::bad_payload, e.what());
      }
      ki.seed_b = r.u64();
      r.expect_end();
      return ki;
    }
    case MsgType::round_submit: {
      RoundSubmit rs;
      rs.round = r.u64();
      rs.client_id = r.u32();
      rs.original_length = r.u64();
      try {
        rs.cts = read_ciphertexts(r, params);
      } catch (const std::invalid_argument& e) {
        throw WireError(ErrorCode::bad_payload, e.what());
      }
      r.expect_end();
      return rs;
    }
    case MsgType::round_result: {
      RoundResult rr;
      rr.round = r.u64();
      rr.agg_count = r.u16();
      rr.original_length = r.u64();
      try {
        rr.cts = read_ciphertexts(r, params);
      } catch (const std::invalid_argument& e) {
        throw WireError(ErrorCode::bad_payload, e.what());
      }
      r.expect_end();
      return rr;
    }
    case MsgType::abort_run: {
      Abort a;
      a.reason = AbortReason(r.u32());
      r.expect_end();
      return a;
    }
  }
  throw WireError(ErrorCode::bad_payload, "wire: unknown message type");
}

size_t MemoryStream::read_some(std::span<uint8_t> buf) {
  size_t take = std::min(buf.size(), data_.size() - read_pos_);
  std::memcpy(buf.data(), data_.data() + read_pos_, take);
  read_pos_ += take;
  return take;
}

void MemoryStream::write_all(std::span<const uint8_t> buf) {
  data_.insert(data_.end(), buf.begin(), buf.end());
}

TcpStream::~TcpStream() {
  if (fd_ >= 0) ::close(fd_);
}

size_t TcpStream::read_some(std::span<uint8_t> buf) {
  while (true) {
    ssize_t got = ::recv(fd_, buf.data(), buf.size(), 0);
    if (got >= 0) return size_t(got);
    if (errno == EINTR) continue;
    throw WireError(ErrorCode::io, std::string("recv: ") + strerror(errno));
  }
}

void TcpStream::write_all(std::span<const uint8_t> buf) {
  size_t sent = 0;
  while (sent < buf.size()) {
    ssize_t n =
        ::send(fd_, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw WireError(ErrorCode::io, std::string("send: ") + strerror(errno));
    }
    sent += size_t(n);
  }
}

void TcpStream::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpListener::TcpListener(const std::string& host, uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0)
    throw WireError(ErrorCode::io, std::string("socket: ") + strerror(errno));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw WireError(ErrorCode::io, "bad listen address: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 64) != 0) {
    int err = errno;
    ::close(fd_);
    throw WireError(ErrorCode::io, std::string("bind/listen: ") + strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<TcpStream> TcpListener::accept() {
  while (true) {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<TcpStream>(fd);
    }
    if (errno == EINTR) continue;
    throw WireError(ErrorCode::io, std::string("accept: ") + strerror(errno));
  }
}

std::unique_ptr<TcpStream> tcp_connect(const std::string& host, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0)
    throw WireError(ErrorCode::io, std::string("socket: ") + strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw WireError(ErrorCode::io, "bad connect address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int err = errno;
    ::close(fd);
    throw WireError(ErrorCode::io, std::string("connect: ") + strerror(err));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_unique<TcpStream>(fd);
}

namespace {

// Reads exactly buf.size() bytes; false on clean EOF at the first byte,
// throws on mid-read truncation.
bool read_exact(ByteStream& stream, std::span<uint8_t> buf) {
  size_t got = 0;
  while (got < buf.size()) {
    size_t n = stream.read_some(buf.subspan(got));
    if (n == 0) {
      if (got == 0) return false;
      throw WireError(ErrorCode::truncated, "wire: stream cut mid-frame");
    }
    got += n;
  }
  return true;
}

bool known_type(uint8_t t) {
  return t == uint8_t(MsgType::key_issue) || t == uint8_t(MsgType::round_submit) ||
         t == uint8_t(MsgType::round_result) || t == uint8_t(MsgType::abort_run);
}

}  // namespace

Frame read_frame(ByteStream& stream, size_t max_payload) {
  uint8_t header[5];
  if (!read_exact(stream, header))
    throw WireError(ErrorCode::closed, "wire: stream closed");
  uint32_t len = uint32_t(header[0]) | uint32_t(header[1]) << 8 |
                 uint32_t(header[2]) << 16 | uint32_t(header[3]) << 24;
  if (!known_type(header[4]))
    throw WireError(ErrorCode::malformed_header, "wire: unknown message type");
  if (len > max_payload)
    throw WireError(ErrorCode::size_cap_exceeded, "wire: frame over size cap");
  Frame f;
  f.type = MsgType(header[4]);
  f.payload.resize(len);
  if (len > 0 && !read_exact(stream, f.payload))
    throw WireError(ErrorCode::truncated, "wire: stream cut mid-payload");
  return f;
}

void write_frame(ByteStream& stream, const Frame& frame) {
  uint8_t header[5];
  uint32_t len = uint32_t(frame.payload.size());
  header[0] = uint8_t(len);
  header[1] = uint8_t(len >> 8);
  header[2] = uint8_t(len >> 16);
  header[3] = uint8_t(len >> 24);
  header[4] = uint8_t(frame.type);
  stream.write_all(header);
  stream.write_all(frame.payload);
}

void send_message(ByteStream& stream, const ProtocolMessage& msg) {
  if (std::holds_alternative<KeyIssue>(msg) && !stream.confidential())
    throw WireError(ErrorCode::refused_on_open_transport,
                    "wire: refusing to send key material on an open transport");
  Frame f{type_of(msg), serialize(msg)};
  write_frame(stream, f);
}

ProtocolMessage recv_message(ByteStream& stream, const SchemeParams& params,
                             size_t max_payload) {
  Frame f = read_frame(stream, max_payload);
  return deserialize(f.type, f.payload, params);
}

}  // namespace esafl::wire
