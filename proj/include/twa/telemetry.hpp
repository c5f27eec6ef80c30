#ifndef TWA_TELEMETRY_HPP
#define TWA_TELEMETRY_HPP

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>

#include <json.hpp>

#include "twa/engine.hpp"
#include "twa/packing/run.hpp"

namespace twa::telemetry {

using Record = nlohmann::ordered_json;

enum class Format { Text, JsonLines };

inline Format parse_format(const std::string& s) {
  if (s == "text") return Format::Text;
  if (s == "json-lines") return Format::JsonLines;
  throw InvalidConfig("unknown report format '" + s + "' (text|json-lines)");
}

/// Wall-clock fields all start with this prefix so comparisons can mask them.
inline constexpr std::string_view kTimingPrefix = "timing_";

inline bool is_timing_key(std::string_view key) { return key.starts_with(kTimingPrefix); }

/// Copy of `r` without timing fields (recursively for nested objects).
inline Record without_timing(const Record& r) {
  if (!r.is_object()) return r;
  Record out = Record::object();
  for (auto it = r.begin(); it != r.end(); ++it) {
    if (!is_timing_key(it.key())) out[it.key()] = without_timing(it.value());
  }
  return out;
}

inline void add_timing(Record& r, const PhaseTimings& t) {
  r["timing_minimize_us"] = t.minimize_us;
  r["timing_concur_us"] = t.concur_us;
  r["timing_local_us"] = t.local_us;
  r["timing_global_us"] = t.global_us;
  r["timing_edits_us"] = t.edits_us;
}

inline Record iteration_record(const IterationStatus& s) {
  Record r;
  r["kind"] = "iteration";
  r["iteration"] = s.iteration;
  r["max_delta"] = s.max_message_delta;
  r["variables"] = s.variables;
  r["factors"] = s.factors;
  r["edges"] = s.edges;
  r["converged"] = s.converged;
  if (s.halted_by) r["halted_by"] = *s.halted_by;
  add_timing(r, s.timing);
  return r;
}

inline Record packing_record(const packing::PackStatus& s) {
  Record r;
  r["kind"] = "iteration";
  r["iteration"] = s.engine.iteration;
  r["max_overlap_depth"] = s.max_overlap.depth;
  r["max_overlap_circle"] = s.max_overlap.circle;
  r["active_factors"] = s.active_factors;
  r["pool_size"] = s.pool_size;
  r["max_delta"] = s.engine.max_message_delta;
  r["converged"] = s.engine.converged;
  r["done"] = s.done;
  add_timing(r, s.engine.timing);
  return r;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// "key=value" pairs separated by spaces; nested objects are flattened with
/// dotted keys.
inline std::string to_text(const Record& r, const std::string& prefix = "") {
  std::string out;
  for (auto it = r.begin(); it != r.end(); ++it) {
    const std::string key = prefix + it.key();
    std::string piece;
    const Record& v = it.value();
    if (v.is_object()) {
      piece = to_text(v, key + ".");
    } else if (v.is_string()) {
      piece = key + "=" + v.get<std::string>();
    } else if (v.is_number_float()) {
      piece = key + "=" + format_number(v.get<double>());
    } else {
      piece = key + "=" + v.dump();
    }
    if (piece.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

/// Streams records one per line in the chosen format.
class Writer {
 public:
  Writer(std::ostream& os, Format f, bool timing = true) : os_(&os), format_(f), timing_(timing) {}

  void write(const Record& r) {
    const Record& out = timing_ ? r : without_timing(r);
    if (format_ == Format::JsonLines) {
      *os_ << out.dump() << '\n';
    } else {
      *os_ << to_text(out) << '\n';
    }
  }

  [[nodiscard]] Format format() const { return format_; }

 private:
  std::ostream* os_;
  Format format_;
  bool timing_;
};

}  // namespace twa::telemetry

#endif  // TWA_TELEMETRY_HPP
