#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smd/common.hpp"

namespace smd::dram {

enum class Cmd : std::uint8_t { ACT, PRE, RD, WR, REF, NACK, MAINT_ACT, MAINT_PRE, MAINT_RD, MAINT_WB };

// Who issued a command. Chip-side sources are the in-DRAM mechanisms.
enum class Source : std::uint8_t { MC, MC_PARA, MC_SCRUB, FR, VR, PRP, PRP_PLUS, DRP, MS, ADV, CHIPS };

const char* cmd_name(Cmd c);
Cmd cmd_from_name(const std::string& s);
const char* source_name(Source s);
Source source_from_name(const std::string& s);
bool is_maint(Cmd c);

struct Origin {
  Source source = Source::MC;
  std::int16_t chip = -1;  // -1: every chip of the rank (lockstep)
  std::uint32_t aux = 0;   // NACK: chip mask; MAINT_WB: codeword index

  bool operator==(const Origin&) const = default;
};

struct CommandEvent {
  Cycle cycle = 0;
  Cmd kind = Cmd::ACT;
  std::int16_t channel = 0;
  std::int16_t rank = 0;
  std::int16_t bank = 0;  // flat bank within the rank; -1 for rank-wide REF
  std::int32_t row = 0;   // REF: first refreshed row
  Origin origin;

  bool operator==(const CommandEvent&) const = default;
};

// "mc", "fr@3", "chips=ff", "ms:17"
std::string origin_to_string(const Origin& o);
Origin origin_from_string(const std::string& s);

std::string to_csv(const CommandEvent& e);
// Throws ParseError on malformed input.
CommandEvent parse_csv(const std::string& line, long line_no = 0);
constexpr const char* kCsvHeader = "cycle,kind,channel,rank,bank,row,origin";

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_event(const CommandEvent& e) = 0;
  virtual void finish(Cycle end) { (void)end; }
};

// FNV-1a over the CSV lines; identical logs give identical hashes whether
// they come from memory or from a file.
class LogHasher : public EventSink {
 public:
  void on_event(const CommandEvent& e) override;
  std::uint64_t value() const { return h_; }
  std::uint64_t count() const { return n_; }
  static std::uint64_t fnv1a(const std::string& s, std::uint64_t h);

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
  std::uint64_t n_ = 0;
};

class EventLog : public EventSink {
 public:
  void on_event(const CommandEvent& e) override;
  const std::vector<CommandEvent>& events() const { return events_; }
  void clear() { events_.clear(); }

 private:
  std::vector<CommandEvent> events_;
};

class CsvWriter : public EventSink {
 public:
  explicit CsvWriter(std::ostream& os);
  void on_event(const CommandEvent& e) override;

 private:
  std::ostream& os_;
};

// Fan-out to several sinks, in registration order.
class EventBus : public EventSink {
 public:
  void add(EventSink* s) { sinks_.push_back(s); }
  void on_event(const CommandEvent& e) override;
  void finish(Cycle end) override;

 private:
  std::vector<EventSink*> sinks_;
  Cycle last_ = 0;
};

std::vector<CommandEvent> read_csv_log(std::istream& is);

}  // namespace smd::dram
