#include "smd/dram/command.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace smd::dram {

namespace {

const char* kCmdNames[] = {"ACT", "PRE", "RD", "WR", "REF", "NACK",
                           "MAINT_ACT", "MAINT_PRE", "MAINT_RD", "MAINT_WB"};
const char* kSourceNames[] = {"mc", "mc-para", "mc-scrub", "fr", "vr", "prp",
                              "prp+", "drp", "ms", "adv", "chips"};

template <typename T>
bool parse_int(const std::string& s, T& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

const char* cmd_name(Cmd c) { return kCmdNames[static_cast<int>(c)]; }

Cmd cmd_from_name(const std::string& s) {
  for (int i = 0; i < 10; ++i)
    if (s == kCmdNames[i]) return static_cast<Cmd>(i);
  throw std::invalid_argument("unknown command '" + s + "'");
}

const char* source_name(Source s) { return kSourceNames[static_cast<int>(s)]; }

Source source_from_name(const std::string& s) {
  for (int i = 0; i < 11; ++i)
    if (s == kSourceNames[i]) return static_cast<Source>(i);
  throw std::invalid_argument("unknown origin '" + s + "'");
}

bool is_maint(Cmd c) {
  return c == Cmd::MAINT_ACT || c == Cmd::MAINT_PRE || c == Cmd::MAINT_RD || c == Cmd::MAINT_WB;
}

std::string origin_to_string(const Origin& o) {
  char buf[48];
  if (o.source == Source::CHIPS) {
    std::snprintf(buf, sizeof buf, "chips=%x", o.aux);
    return buf;
  }
  std::string s = source_name(o.source);
  if (o.chip >= 0) s += "@" + std::to_string(o.chip);
  if (o.source == Source::MS && o.aux != 0) s += ":" + std::to_string(o.aux - 1);
  return s;
}

Origin origin_from_string(const std::string& s) {
  Origin o;
  if (s.rfind("chips=", 0) == 0) {
    o.source = Source::CHIPS;
    o.aux = static_cast<std::uint32_t>(std::stoul(s.substr(6), nullptr, 16));
    return o;
  }
  std::string base = s;
  auto colon = base.find(':');
  if (colon != std::string::npos) {
    std::uint32_t cw = 0;
    if (!parse_int(base.substr(colon + 1), cw)) throw std::invalid_argument("bad codeword in origin");
    o.aux = cw + 1;
    base = base.substr(0, colon);
  }
  auto at = base.find('@');
  if (at != std::string::npos) {
    int chip = 0;
    if (!parse_int(base.substr(at + 1), chip)) throw std::invalid_argument("bad chip in origin");
    o.chip = static_cast<std::int16_t>(chip);
    base = base.substr(0, at);
  }
  o.source = source_from_name(base);
  return o;
}

std::string to_csv(const CommandEvent& e) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%lld,%s,%d,%d,%d,%d,", static_cast<long long>(e.cycle),
                cmd_name(e.kind), e.channel, e.rank, e.bank, e.row);
  return std::string(buf) + origin_to_string(e.origin);
}

CommandEvent parse_csv(const std::string& line, long line_no) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) f.push_back(tok);
  if (f.size() != 7) throw ParseError("event log: expected 7 fields", line_no);
  CommandEvent e;
  long long cyc = 0;
  int ch = 0, rk = 0, bk = 0, row = 0;
  if (!parse_int(f[0], cyc) || !parse_int(f[2], ch) || !parse_int(f[3], rk) ||
      !parse_int(f[4], bk) || !parse_int(f[5], row))
    throw ParseError("event log: bad integer field", line_no);
  e.cycle = cyc;
  e.channel = static_cast<std::int16_t>(ch);
  e.rank = static_cast<std::int16_t>(rk);
  e.bank = static_cast<std::int16_t>(bk);
  e.row = row;
  try {
    e.kind = cmd_from_name(f[1]);
    e.origin = origin_from_string(f[6]);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("event log: ") + ex.what(), line_no);
  }
  return e;
}

std::uint64_t LogHasher::fnv1a(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  h ^= '\n';
  h *= 1099511628211ULL;
  return h;
}

void LogHasher::on_event(const CommandEvent& e) {
  h_ = fnv1a(to_csv(e), h_);
  ++n_;
}

void EventLog::on_event(const CommandEvent& e) { events_.push_back(e); }

CsvWriter::CsvWriter(std::ostream& os) : os_(os) { os_ << kCsvHeader << '\n'; }

void CsvWriter::on_event(const CommandEvent& e) { os_ << to_csv(e) << '\n'; }

void EventBus::on_event(const CommandEvent& e) {
  if (e.cycle < last_) throw InvariantError("event log out of cycle order");
  last_ = e.cycle;
  for (auto* s : sinks_) s->on_event(e);
}

void EventBus::finish(Cycle end) {
  for (auto* s : sinks_) s->finish(end);
}

std::vector<CommandEvent> read_csv_log(std::istream& is) {
  std::vector<CommandEvent> out;
  std::string line;
  long n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kCsvHeader) continue;
    out.push_back(parse_csv(line, n));
  }
  return out;
}

}  // namespace smd::dram
