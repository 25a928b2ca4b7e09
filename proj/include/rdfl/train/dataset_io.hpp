#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/train/partition.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl::train {

/// Shortest decimal form that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

namespace detail {

inline double parse_double(std::string_view text, std::size_t line) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::DecodeError,
          "line " + std::to_string(line) + ": not a number: '" + std::string(text) + "'");
  return v;
}

template <typename Fn>
void for_each_field(std::string_view line, Fn fn) {
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fn(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
}

}  // namespace detail

/// One sample per line: comma-separated features, label last. Blank lines and
/// lines starting with '#' are skipped.
inline LocalDataset read_dataset(std::istream& in) {
  LocalDataset data;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    std::vector<double> fields;
    detail::for_each_field(line, [&](std::string_view f) { fields.push_back(detail::parse_double(f, lineno)); });
    require(fields.size() >= 2, ErrorCode::DecodeError, "line " + std::to_string(lineno) + ": need features and a label");
    if (width == 0) width = fields.size();
    require(fields.size() == width, ErrorCode::DecodeError, "line " + std::to_string(lineno) + ": inconsistent width");
    Sample s;
    s.label = fields.back();
    fields.pop_back();
    s.x = std::move(fields);
    data.examples.push_back(std::move(s));
  }
  return data;
}

inline void write_dataset(std::ostream& out, const LocalDataset& data) {
  for (const auto& s : data.examples) {
    for (double x : s.x) out << format_double(x) << ',';
    out << format_double(s.label) << '\n';
  }
}

/// One line per node, indices comma-separated (an empty line for an empty partition).
inline void write_partitions(std::ostream& out, const Partition& partition) {
  for (const auto& p : partition) {
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << p[i];
    out << '\n';
  }
}

inline Partition read_partitions(std::istream& in) {
  Partition out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto& p = out.emplace_back();
    if (line.empty()) continue;
    detail::for_each_field(line, [&](std::string_view f) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      require(ec == std::errc() && ptr == f.data() + f.size(), ErrorCode::DecodeError,
              "line " + std::to_string(lineno) + ": bad index '" + std::string(f) + "'");
      p.push_back(v);
    });
  }
  return out;
}

inline LocalDataset subset(const LocalDataset& data, const std::vector<std::size_t>& indices) {
  LocalDataset out;
  out.examples.reserve(indices.size());
  for (auto i : indices) {
    require(i < data.size(), ErrorCode::InvalidArgument, "partition index out of range");
    out.examples.push_back(data.examples[i]);
  }
  return out;
}

}  // namespace rdfl::train
