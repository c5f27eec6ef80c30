#ifndef TWA_STEER_WEBSOCKET_HPP
#define TWA_STEER_WEBSOCKET_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include "twa/errors.hpp"

namespace twa::steer::ws {

enum Opcode : std::uint8_t {
  kContinuation = 0x0,
  kText = 0x1,
  kBinary = 0x2,
  kClose = 0x8,
  kPing = 0x9,
  kPong = 0xA,
};

/// Sec-WebSocket-Accept value for a client key.
inline std::string accept_key(std::string_view client_key) {
  static constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  std::string joined(client_key);
  joined.append(kGuid);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(out), static_cast<std::size_t>(n));
}

/// Value of an HTTP header (case-insensitive name), trimmed.
inline std::optional<std::string> header(std::string_view request, std::string_view name) {
  std::size_t pos = request.find("\r\n");
  while (pos != std::string_view::npos && pos + 2 < request.size()) {
    const std::size_t start = pos + 2;
    std::size_t end = request.find("\r\n", start);
    if (end == std::string_view::npos) end = request.size();
    const std::string_view line = request.substr(start, end - start);
    const std::size_t colon = line.find(':');
    if (colon != std::string_view::npos && colon == name.size() &&
        std::equal(name.begin(), name.end(), line.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      std::string_view v = line.substr(colon + 1);
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
      return std::string(v);
    }
    if (end >= request.size()) break;
    pos = end;
  }
  return std::nullopt;
}

/// 101 response for an upgrade request, or nullopt if the request lacks a key.
inline std::optional<std::string> handshake_response(std::string_view request) {
  const auto key = header(request, "Sec-WebSocket-Key");
  if (!key) return std::nullopt;
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " + accept_key(*key) + "\r\n\r\n";
}

/// Single unfragmented frame. Server frames are unmasked; `mask` is for
/// client-side use (tests).
inline std::string encode_frame(Opcode op, std::string_view payload,
                                std::optional<std::uint32_t> mask = std::nullopt) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | op));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<char>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((n >> 8) & 0xFF));
    out.push_back(static_cast<char>(n & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> s) & 0xFF));
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  const unsigned char key[4] = {static_cast<unsigned char>(*mask >> 24), static_cast<unsigned char>(*mask >> 16),
                                static_cast<unsigned char>(*mask >> 8), static_cast<unsigned char>(*mask)};
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

struct Message {
  Opcode opcode = kText;
  std::string payload;
};

/// Incremental frame parser; reassembles fragmented messages.
class Parser {
 public:
  void feed(std::string_view bytes) { buf_.append(bytes); }

  std::optional<Message> next() {
    while (true) {
      if (buf_.size() < 2) return std::nullopt;
      const auto b0 = static_cast<std::uint8_t>(buf_[0]);
      const auto b1 = static_cast<std::uint8_t>(buf_[1]);
      const bool fin = b0 & 0x80;
      const auto op = static_cast<Opcode>(b0 & 0x0F);
      const bool masked = b1 & 0x80;
      std::uint64_t len = b1 & 0x7F;
      std::size_t pos = 2;
      if (len == 126) {
        if (buf_.size() < 4) return std::nullopt;
        len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[2])) << 8) |
              static_cast<std::uint8_t>(buf_[3]);
        pos = 4;
      } else if (len == 127) {
        if (buf_.size() < 10) return std::nullopt;
        len = 0;
        for (int k = 0; k < 8; ++k) len = (len << 8) | static_cast<std::uint8_t>(buf_[2 + k]);
        pos = 10;
      }
      if (len > (64u << 20)) throw DecodeError("websocket frame too large", 0);
      unsigned char key[4] = {0, 0, 0, 0};
      if (masked) {
        if (buf_.size() < pos + 4) return std::nullopt;
        for (int k = 0; k < 4; ++k) key[k] = static_cast<unsigned char>(buf_[pos + k]);
        pos += 4;
      }
      if (buf_.size() < pos + len) return std::nullopt;
      std::string payload = buf_.substr(pos, len);
      if (masked) {
        for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ key[i % 4]);
      }
      buf_.erase(0, pos + len);
      if (op >= kClose) return Message{op, std::move(payload)};  // control frames are never fragmented
      if (op != kContinuation) partial_op_ = op;
      partial_.append(payload);
      if (fin) {
        Message m{partial_op_, std::move(partial_)};
        partial_.clear();
        return m;
      }
    }
  }

 private:
  std::string buf_;
  std::string partial_;
  Opcode partial_op_ = kText;
};

}  // namespace twa::steer::ws

#endif  // TWA_STEER_WEBSOCKET_HPP
