/**
 * @file wire.hpp
 * @brief Bit-exact serialization and length-prefixed framing for all
 *        client<->aggregator and dealer->client messages.
 *
 * Frame layout: 4-byte little-endian payload length, 1-byte message type,
 * payload. Message type registry: 0x01 KeyIssue, 0x02 RoundSubmit,
 * 0x03 RoundResult, 0x7F Abort. All integers are little-endian; ring
 * elements use the RingElem byte layout. The full byte-for-byte reference
 * lives in docs/wire_format.md, pinned by golden fixtures.
 *
 * Transport is plain TCP by default: the scheme's security claim is exactly
 * that ciphertexts need no secure channel. The one exception is KeyIssue,
 * which is confidential key material; sending it over a non-confidential
 * stream is refused at runtime (file drop and in-process delivery are the
 * supported paths).
 */
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "esafl/eshe.hpp"
#include "esafl/params.hpp"

namespace esafl::wire {

enum class ErrorCode {
  malformed_header,
  truncated,
  size_cap_exceeded,
  bad_payload,
  refused_on_open_transport,
  closed,
  io,
};

struct WireError : std::runtime_error {
  ErrorCode code;
  WireError(ErrorCode c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

enum class MsgType : uint8_t {
  key_issue = 0x01,
  round_submit = 0x02,
  round_result = 0x03,
  abort_run = 0x7F,
};

struct Frame {
  MsgType type;
  std::vector<uint8_t> payload;
};

/// Dealer -> client, initialization only. Confidential.
struct KeyIssue {
  std::string params_profile;
  SparseTernaryKey enc_key;
  SmallPoly dec_key;
  RingElem a0;
  uint64_t seed_b = 0;
};

struct RoundSubmit {
  uint64_t round = 0;
  uint32_t client_id = 0;
  uint64_t original_length = 0;  // gradient count L
  std::vector<Ciphertext> cts;
};

struct RoundResult {
  uint64_t round = 0;
  uint16_t agg_count = 0;
  uint64_t original_length = 0;
  std::vector<Ciphertext> cts;
};

enum class AbortReason : uint32_t {
  barrier_timeout = 1,
  stale_round = 2,
  duplicate_submission = 3,
  protocol_error = 4,
};

struct Abort {
  AbortReason reason = AbortReason::protocol_error;
};

using ProtocolMessage = std::variant<KeyIssue, RoundSubmit, RoundResult, Abort>;

MsgType type_of(const ProtocolMessage& msg);

/// Canonical encoding; injective on valid messages.
std::vector<uint8_t> serialize(const ProtocolMessage& msg);
/// Frame-level convenience: header plus payload bytes.
size_t framed_size(const ProtocolMessage& msg, const SchemeParams& params);

/// Parses a payload of the given type. RoundSubmit/RoundResult need the
/// shared params to size ring elements; KeyIssue is self-contained.
/// Arbitrary byte inputs either parse or throw WireError; never over-read.
ProtocolMessage deserialize(MsgType type, std::span<const uint8_t> payload,
                            const SchemeParams& params);

/// Reliable ordered byte stream.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  /// Up to buf.size() bytes; 0 means end of stream.
  virtual size_t read_some(std::span<uint8_t> buf) = 0;
  virtual void write_all(std::span<const uint8_t> buf) = 0;
  /// Whether confidential key material may travel on this stream.
  virtual bool confidential() const = 0;
};

/// In-memory loopback stream (confidential: stays in-process).
class MemoryStream : public ByteStream {
 public:
  size_t read_some(std::span<uint8_t> buf) override;
  void write_all(std::span<const uint8_t> buf) override;
  bool confidential() const override { return true; }
  size_t pending() const { return data_.size() - read_pos_; }

 private:
  std::vector<uint8_t> data_;
  size_t read_pos_ = 0;
};

/// Plain TCP stream (non-confidential: models the public channel).
class TcpStream : public ByteStream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {}
  ~TcpStream() override;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  size_t read_some(std::span<uint8_t> buf) override;
  void write_all(std::span<const uint8_t> buf) override;
  bool confidential() const override { return false; }
  void shutdown_both();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  TcpListener(const std::string& host, uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const { return port_; }
  std::unique_ptr<TcpStream> accept();
  void close();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

std::unique_ptr<TcpStream> tcp_connect(const std::string& host, uint16_t port);

inline constexpr size_t kDefaultMaxPayload = size_t(256) << 20;  // 256 MiB

/// Exactly-once framed reads; partial reads resume, truncation surfaces as
/// a distinct error and never delivers a partial message upward.
Frame read_frame(ByteStream& stream, size_t max_payload = kDefaultMaxPayload);
void write_frame(ByteStream& stream, const Frame& frame);

/// Refuses KeyIssue on non-confidential streams.
void send_message(ByteStream& stream, const ProtocolMessage& msg);
ProtocolMessage recv_message(ByteStream& stream, const SchemeParams& params,
                             size_t max_payload = kDefaultMaxPayload);

}  // namespace esafl::wire
