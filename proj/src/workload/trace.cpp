#include "smd/workload/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace smd::workload {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_num(std::string_view s, T& v, int base = 10) {
  if (s.empty()) return false;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v, base);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

std::optional<TraceEntry> parse_trace_line(std::string_view line, int line_no) {
  line = trim(line);
  if (line.empty() || line.front() == '#') return std::nullopt;
  auto f = split_ws(line);
  if (f.size() != 3) throw ParseError("trace: expected `<bubbles> R|W 0x<hex>`", line_no);
  TraceEntry e;
  if (!parse_num(f[0], e.bubbles) || e.bubbles < 0) throw ParseError("trace: bad bubble count", line_no);
  if (f[1] == "R" || f[1] == "r")
    e.write = false;
  else if (f[1] == "W" || f[1] == "w")
    e.write = true;
  else
    throw ParseError("trace: access kind must be R or W", line_no);
  std::string_view a = f[2];
  if (a.size() < 3 || a[0] != '0' || (a[1] != 'x' && a[1] != 'X'))
    throw ParseError("trace: address must be 0x-prefixed hex", line_no);
  if (!parse_num(a.substr(2), e.addr, 16)) throw ParseError("trace: bad hex address", line_no);
  return e;
}

std::string format_trace_line(const TraceEntry& e) {
  std::ostringstream s;
  s << e.bubbles << (e.write ? " W 0x" : " R 0x") << std::hex << e.addr;
  return s.str();
}

Trace read_trace(std::istream& in) {
  Trace t;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto e = parse_trace_line(line, n)) t.push_back(*e);
  }
  return t;
}

Trace read_trace_file(const std::string& path) {
  auto in = open_in(path);
  return read_trace(in);
}

void write_trace(std::ostream& out, const Trace& t) {
  for (const auto& e : t) out << format_trace_line(e) << '\n';
}

void write_trace_file(const std::string& path, const Trace& t) {
  auto out = open_out(path);
  write_trace(out, t);
}

std::vector<int> read_weak_rows_file(const std::string& path) {
  auto in = open_in(path);
  std::vector<int> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    int r;
    if (!parse_num(s, r) || r < 0) throw ParseError("weak-row file: bad row id", n);
    rows.push_back(r);
  }
  return rows;
}

void write_weak_rows_file(const std::string& path, const std::vector<int>& rows) {
  auto out = open_out(path);
  for (int r : rows) out << r << '\n';
}

std::vector<FaultEntry> read_fault_map_file(const std::string& path) {
  auto in = open_in(path);
  std::vector<FaultEntry> faults;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
      if (i == s.size() || s[i] == ',') {
        f.push_back(trim(s.substr(start, i - start)));
        start = i + 1;
      }
    FaultEntry e;
    bool ok = false;
    if (f.size() == 2) ok = parse_num(f[0], e.row) && parse_num(f[1], e.codeword);
    if (f.size() == 3) ok = parse_num(f[0], e.bank) && parse_num(f[1], e.row) && parse_num(f[2], e.codeword);
    if (!ok || e.row < 0 || e.codeword < 0 || (f.size() == 3 && e.bank < 0))
      throw ParseError("fault map: expected `row,codeword` or `bank,row,codeword`", n);
    faults.push_back(e);
  }
  return faults;
}

void write_fault_map_file(const std::string& path, const std::vector<FaultEntry>& faults) {
  auto out = open_out(path);
  for (const auto& f : faults) {
    if (f.bank >= 0) out << f.bank << ',';
    out << f.row << ',' << f.codeword << '\n';
  }
}

}  // namespace smd::workload
