#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smd/common.hpp"

namespace smd::workload {

struct TraceEntry {
  std::int64_t bubbles = 0;
  bool write = false;
  std::uint64_t addr = 0;
  bool operator==(const TraceEntry&) const = default;
};

using Trace = std::vector<TraceEntry>;

// `<bubbles> R|W 0x<hex>`; returns nullopt for blank lines and `#` comments.
std::optional<TraceEntry> parse_trace_line(std::string_view line, int line_no = 0);
std::string format_trace_line(const TraceEntry& e);

Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);
void write_trace(std::ostream& out, const Trace& t);
void write_trace_file(const std::string& path, const Trace& t);

// One decimal row id per line.
std::vector<int> read_weak_rows_file(const std::string& path);
void write_weak_rows_file(const std::string& path, const std::vector<int>& rows);

struct FaultEntry {
  int bank = -1;  // -1: every bank
  int row = 0;
  int codeword = 0;
  bool operator==(const FaultEntry&) const = default;
};
// "row,codeword" per line; an optional leading bank field ("bank,row,codeword") pins a bank.
std::vector<FaultEntry> read_fault_map_file(const std::string& path);
void write_fault_map_file(const std::string& path, const std::vector<FaultEntry>& faults);

}  // namespace smd::workload
