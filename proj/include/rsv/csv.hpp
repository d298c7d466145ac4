#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "rsv/error.hpp"

namespace rsv::csv {

/// One physical record of a CSV stream. `line` is the 1-based line number on
/// which the record starts (the header is line 1).
struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Reads the next record; returns false at end of stream.
  bool next(Record& out) {
    out.fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    out.line = line_ + 1;
    char c;
    while (in_.get(c)) {
      any = true;
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get(c);
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"') {
        in_quotes = true;
      } else if (c == ',') {
        out.fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r') {
        if (in_.peek() == '\n') in_.get(c);
        ++line_;
        out.fields.push_back(std::move(field));
        return true;
      } else if (c == '\n') {
        ++line_;
        out.fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(c);
      }
    }
    if (!any) return false;
    ++line_;
    out.fields.push_back(std::move(field));
    return true;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool blank(const Record& r) {
  for (const auto& f : r.fields)
    if (!trim(f).empty()) return false;
  return true;
}

/// Column lookup built from a header record. Names compare after trimming.
class Header {
 public:
  Header() = default;
  explicit Header(const Record& header) {
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
      std::string name(trim(header.fields[i]));
      if (i == 0 && name.size() >= 3 && name.compare(0, 3, "\xEF\xBB\xBF") == 0) name.erase(0, 3);
      index_.emplace(std::move(name), i);
    }
  }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Resolves every required column or throws MissingColumn naming the first absent one.
  std::vector<std::size_t> require(const std::vector<std::string_view>& names,
                                   std::string_view source) const {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (auto n : names) {
      auto idx = find(n);
      if (!idx) fail(ErrorKind::MissingColumn, std::string(source) + ": missing column '" + std::string(n) + "'");
      out.push_back(*idx);
    }
    return out;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace rsv::csv
