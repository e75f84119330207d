#include "rac/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace rac {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  // strtod accepts nan/inf spellings, which are rejected later by validation.
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && !tmp.empty();
}

template <typename Int>
Int field_int(std::string_view tok, std::string_view prefix, std::size_t line) {
  Int v{};
  if (!parse_int(tok.substr(prefix.size()), v)) {
    throw ParseError(line, "bad value in '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

std::string format_decimal9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t declared_n = 0;
  std::optional<SessionMark> pending;

  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;

    if (sv.front() == '#') {
      std::string_view body = sv.substr(1);
      if (have_header) {
        auto toks = split_ws(body);
        if (toks.size() == 2 && toks[0].starts_with("session=") &&
            toks[1].starts_with("occurrence=")) {
          SessionMark m;
          m.position = trace.requests.size();
          m.session = field_int<std::uint64_t>(toks[0], "session=", lineno);
          m.occurrence = field_int<std::uint64_t>(toks[1], "occurrence=", lineno);
          trace.sessions.push_back(m);
        }
        // Other comments after the header carry no data.
      } else {
        trace.comments.emplace_back(body);
      }
      continue;
    }

    auto toks = split_ws(sv);
    if (!have_header) {
      if (toks.size() != 4 || toks[0] != "RACTRACE" || toks[1] != "v1" ||
          !toks[2].starts_with("dim=") || !toks[3].starts_with("n=")) {
        throw ParseError(lineno, "expected header 'RACTRACE v1 dim=<d> n=<count>'");
      }
      trace.dim = field_int<std::size_t>(toks[2], "dim=", lineno);
      declared_n = field_int<std::size_t>(toks[3], "n=", lineno);
      if (trace.dim == 0) throw ParseError(lineno, "dim must be positive");
      trace.requests.reserve(declared_n);
      have_header = true;
      continue;
    }

    if (toks.size() < 2 + trace.dim) {
      throw ParseError(lineno, "record has " + std::to_string(toks.size()) +
                                   " fields, expected at least " +
                                   std::to_string(2 + trace.dim));
    }
    Request r;
    if (!parse_int(toks[0], r.id)) throw ParseError(lineno, "bad request id");
    if (!parse_int(toks[1], r.t)) throw ParseError(lineno, "bad time step");
    std::vector<double> values(trace.dim);
    for (std::size_t i = 0; i < trace.dim; ++i) {
      if (!parse_double(toks[2 + i], values[i])) {
        throw ParseError(lineno, "bad decimal '" + std::string(toks[2 + i]) + "'");
      }
    }
    for (std::size_t i = 2 + trace.dim; i < toks.size(); ++i) {
      auto tok = toks[i];
      if (tok.starts_with("topic=")) {
        r.topic_truth = field_int<std::int64_t>(tok, "topic=", lineno);
      } else if (tok.starts_with("parent=")) {
        r.parent_truth = field_int<std::uint64_t>(tok, "parent=", lineno);
      } else if (tok.starts_with("key=")) {
        r.exact_key = field_int<std::int64_t>(tok, "key=", lineno);
      } else {
        throw ParseError(lineno, "unknown field '" + std::string(tok) + "'");
      }
    }
    if (r.t != trace.requests.size() + 1) {
      throw ValidationError("line " + std::to_string(lineno) + ": time step " +
                            std::to_string(r.t) + " out of sequence (expected " +
                            std::to_string(trace.requests.size() + 1) + ")");
    }
    try {
      r.embedding = EmbeddingVector::from_unit(std::move(values));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    trace.requests.push_back(std::move(r));
  }
  if (!have_header) throw ParseError(lineno, "missing RACTRACE header");
  if (trace.requests.size() != declared_n) {
    throw ParseError(lineno, "header declares n=" + std::to_string(declared_n) + " but found " +
                                 std::to_string(trace.requests.size()) + " records");
  }
  trace.validate();
  return trace;
}

void write_trace(const Trace& trace, std::ostream& out) {
  for (const auto& c : trace.comments) out << '#' << c << '\n';
  out << "RACTRACE v1 dim=" << trace.dim << " n=" << trace.requests.size() << '\n';
  std::size_t next_mark = 0;
  for (std::size_t i = 0; i < trace.requests.size(); ++i) {
    while (next_mark < trace.sessions.size() && trace.sessions[next_mark].position == i) {
      const auto& m = trace.sessions[next_mark++];
      out << "# session=" << m.session << " occurrence=" << m.occurrence << '\n';
    }
    const Request& r = trace.requests[i];
    out << r.id << ' ' << r.t;
    for (double v : r.embedding.values()) out << ' ' << format_decimal9(v);
    if (r.topic_truth) out << " topic=" << *r.topic_truth;
    if (r.parent_truth) out << " parent=" << *r.parent_truth;
    if (r.exact_key) out << " key=" << *r.exact_key;
    out << '\n';
  }
  while (next_mark < trace.sessions.size()) {
    const auto& m = trace.sessions[next_mark++];
    out << "# session=" << m.session << " occurrence=" << m.occurrence << '\n';
  }
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  return read_trace(in);
}

void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  write_trace(trace, out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace rac
