#ifndef TWA_STEER_FRAMES_HPP
#define TWA_STEER_FRAMES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "twa/errors.hpp"
#include "twa/packing/maintenance.hpp"
#include "twa/packing/steering.hpp"

namespace twa::steer {

using packing::Command;
using packing::OverlapReport;

struct CircleState {
  std::int64_t id = 0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const CircleState&) const = default;
};

struct Snapshot {
  long iteration = 0;
  std::vector<CircleState> circles;
  double radius = 0.0;
  double density = 0.0;
  OverlapReport max_overlap;
  bool converged = false;

  bool operator==(const Snapshot&) const = default;
};

struct ErrorFrame {
  std::string message;
  std::optional<std::int64_t> offset;  // byte offset of a decode failure

  bool operator==(const ErrorFrame&) const = default;
};

using Frame = std::variant<Snapshot, Command, ErrorFrame>;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson command_json(const Command& c) {
  ojson j;
  j["type"] = "command";
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, packing::cmd::DragStart>) {
          j["cmd"] = "drag_start";
          j["id"] = v.id;
        } else if constexpr (std::is_same_v<T, packing::cmd::DragMove>) {
          j["cmd"] = "drag_move";
          j["id"] = v.id;
          j["x"] = v.x;
          j["y"] = v.y;
        } else if constexpr (std::is_same_v<T, packing::cmd::DragEnd>) {
          j["cmd"] = "drag_end";
          j["id"] = v.id;
        } else if constexpr (std::is_same_v<T, packing::cmd::Vacancy>) {
          j["cmd"] = "vacancy";
          j["x"] = v.x;
          j["y"] = v.y;
        } else if constexpr (std::is_same_v<T, packing::cmd::Pause>) {
          j["cmd"] = "pause";
        } else if constexpr (std::is_same_v<T, packing::cmd::Resume>) {
          j["cmd"] = "resume";
        } else {
          j["cmd"] = "set_param";
          j["key"] = v.key;
          j["value"] = v.value;
        }
      },
      c);
  return j;
}

template <class T>
T field(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DecodeError(std::string("missing field '") + key + "'", 0);
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DecodeError(std::string("field '") + key + "' has the wrong type", 0);
  }
}

inline double number(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DecodeError(std::string("missing field '") + key + "'", 0);
  if (!it->is_number()) throw DecodeError(std::string("field '") + key + "' is not a number", 0);
  return it->get<double>();
}

inline std::int64_t integer(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DecodeError(std::string("missing field '") + key + "'", 0);
  if (!it->is_number_integer()) throw DecodeError(std::string("field '") + key + "' is not an integer", 0);
  return it->get<std::int64_t>();
}

inline Command decode_command(const ojson& j) {
  const auto name = field<std::string>(j, "cmd");
  if (name == "drag_start") return packing::cmd::DragStart{integer(j, "id")};
  if (name == "drag_move") return packing::cmd::DragMove{integer(j, "id"), number(j, "x"), number(j, "y")};
  if (name == "drag_end") return packing::cmd::DragEnd{integer(j, "id")};
  if (name == "vacancy") return packing::cmd::Vacancy{number(j, "x"), number(j, "y")};
  if (name == "pause") return packing::cmd::Pause{};
  if (name == "resume") return packing::cmd::Resume{};
  if (name == "set_param") return packing::cmd::SetParam{field<std::string>(j, "key"), number(j, "value")};
  throw DecodeError("unknown command '" + name + "'", 0);
}

inline Snapshot decode_snapshot(const ojson& j) {
  Snapshot s;
  s.iteration = static_cast<long>(integer(j, "iteration"));
  s.radius = number(j, "radius");
  s.density = number(j, "density");
  s.converged = field<bool>(j, "converged");
  auto it = j.find("circles");
  if (it == j.end() || !it->is_array() || it->size() % 3 != 0) {
    throw DecodeError("field 'circles' must be a flat [id,x,y,...] array", 0);
  }
  for (std::size_t k = 0; k < it->size(); k += 3) {
    const ojson& id = (*it)[k];
    const ojson& x = (*it)[k + 1];
    const ojson& y = (*it)[k + 2];
    if (!id.is_number_integer() || !x.is_number() || !y.is_number()) {
      throw DecodeError("field 'circles' holds a non-numeric entry", 0);
    }
    s.circles.push_back({id.get<std::int64_t>(), x.get<double>(), y.get<double>()});
  }
  auto mo = j.find("max_overlap");
  if (mo == j.end() || !mo->is_object()) throw DecodeError("missing field 'max_overlap'", 0);
  s.max_overlap.circle = integer(*mo, "circle");
  s.max_overlap.depth = number(*mo, "depth");
  return s;
}

}  // namespace detail

/// One frame as a single-line structured-text object.
inline std::string encode(const Frame& f) {
  using detail::ojson;
  ojson j;
  if (const auto* s = std::get_if<Snapshot>(&f)) {
    j["type"] = "snapshot";
    j["iteration"] = s->iteration;
    ojson flat = ojson::array();
    for (const CircleState& c : s->circles) {
      flat.push_back(c.id);
      flat.push_back(c.x);
      flat.push_back(c.y);
    }
    j["circles"] = std::move(flat);
    j["radius"] = s->radius;
    j["density"] = s->density;
    j["max_overlap"] = ojson{{"circle", s->max_overlap.circle}, {"depth", s->max_overlap.depth}};
    j["converged"] = s->converged;
  } else if (const auto* c = std::get_if<Command>(&f)) {
    j = detail::command_json(*c);
  } else {
    const auto& e = std::get<ErrorFrame>(f);
    j["type"] = "error";
    j["message"] = e.message;
    if (e.offset) j["offset"] = *e.offset;
  }
  return j.dump();
}

/// Inverse of encode. Throws DecodeError carrying the byte offset of a
/// syntax error (0 for well-formed text with the wrong shape).
inline Frame decode(std::string_view text) {
  using detail::ojson;
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto at = e.byte > 0 ? static_cast<std::size_t>(e.byte - 1) : 0;
    throw DecodeError(std::string("malformed frame: ") + e.what(), at);
  }
  if (!j.is_object()) throw DecodeError("frame is not an object", 0);
  const auto type = detail::field<std::string>(j, "type");
  if (type == "snapshot") return detail::decode_snapshot(j);
  if (type == "command") return detail::decode_command(j);
  if (type == "error") {
    ErrorFrame e;
    e.message = detail::field<std::string>(j, "message");
    if (j.contains("offset")) e.offset = detail::integer(j, "offset");
    return e;
  }
  throw DecodeError("unknown frame type '" + type + "'", 0);
}

/// Length-delimited framing for a byte stream: "<decimal length>\n<payload>".
inline std::string delimit(std::string_view payload) {
  std::string out = std::to_string(payload.size());
  out.push_back('\n');
  out.append(payload);
  return out;
}

/// Incremental splitter for length-delimited streams.
class FrameReader {
 public:
  void feed(std::string_view bytes) { buf_.append(bytes); }

  /// Next complete payload, if buffered. A bad length header throws
  /// DecodeError and discards the offending line so the stream can resync.
  std::optional<std::string> next() {
    const auto nl = buf_.find('\n');
    if (nl == std::string::npos) {
      if (buf_.size() > 20) fail_header(buf_.size());
      return std::nullopt;
    }
    std::size_t len = 0;
    if (nl == 0 || nl > 19) fail_header(nl + 1);
    for (std::size_t i = 0; i < nl; ++i) {
      const char ch = buf_[i];
      if (ch < '0' || ch > '9') fail_header(nl + 1);
      len = len * 10 + static_cast<std::size_t>(ch - '0');
    }
    if (len > kMaxFrame) fail_header(nl + 1);
    if (buf_.size() < nl + 1 + len) return std::nullopt;
    std::string payload = buf_.substr(nl + 1, len);
    buf_.erase(0, nl + 1 + len);
    consumed_ += nl + 1 + len;
    return payload;
  }

  [[nodiscard]] std::size_t buffered() const { return buf_.size(); }

  static constexpr std::size_t kMaxFrame = 64u << 20;

 private:
  [[noreturn]] void fail_header(std::size_t drop) {
    const std::size_t at = consumed_;
    buf_.erase(0, drop);
    consumed_ += drop;
    throw DecodeError("bad frame length header", at);
  }

  std::string buf_;
  std::size_t consumed_ = 0;
};

}  // namespace twa::steer

#endif  // TWA_STEER_FRAMES_HPP
