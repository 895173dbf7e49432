#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mmner/error.hpp"

namespace mmner {

using Json = nlohmann::json;

// Formats a double with 17 significant digits so that every weight written
// to a model file parses back to the identical bit pattern.
inline std::string format_double(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

inline bool is_flat_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const auto& e : j) {
    if (!is_scalar(e)) return false;
  }
  return true;
}

inline void dump_scalar(std::string& out, const Json& j) {
  if (j.is_number_float()) {
    out += format_double(j.get<double>());
  } else {
    out += j.dump();
  }
}

inline void dump_value(std::string& out, const Json& j, int depth) {
  const std::string pad(static_cast<size_t>(depth + 1) * 2, ' ');
  const std::string closing(static_cast<size_t>(depth) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += Json(it.key()).dump();
      out += ": ";
      dump_value(out, it.value(), depth + 1);
    }
    out += "\n" + closing + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (is_flat_array(j)) {
      out += "[";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        dump_scalar(out, j[i]);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      dump_value(out, j[i], depth + 1);
    }
    out += "\n" + closing + "]";
  } else {
    dump_scalar(out, j);
  }
}

}  // namespace detail

// Pretty-prints JSON with keys in sorted order, scalar arrays on one line,
// and floats at 17 significant digits. Output is a pure function of the value.
inline std::string dump_json(const Json& j) {
  std::string out;
  detail::dump_value(out, j, 0);
  out += "\n";
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_file(const std::string& path, ErrorCode onError) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(onError, e.what());
  }
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(onError, path + ": " + e.what());
  }
}

}  // namespace mmner
