#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smd/simkit/audit.hpp"
#include "smd/simkit/energy.hpp"

namespace smd::simkit {

struct CoreReport {
  int core = 0;
  double ipc = 0;
  std::int64_t retired = 0;
  std::int64_t loads = 0;
  std::int64_t stores = 0;
};

struct Report {
  std::string name;
  std::string mode;
  Cycle cycles = 0;
  bool finished = true;  // every request completed (run-to-completion mode)
  std::vector<CoreReport> cores;
  double throughput = 0;  // sum of per-core IPC
  std::vector<double> alone_ipc;
  double weighted_speedup = -1;  // -1 when alone runs were not made

  std::int64_t acts = 0;
  std::int64_t nacks = 0;
  std::int64_t partial_nacks = 0;
  double nack_rate = 0;
  std::int64_t retries = 0;
  std::int64_t retry_slips = 0;
  std::int64_t reads = 0;
  std::int64_t writes = 0;
  std::int64_t refs = 0;
  std::int64_t para_acts = 0;
  std::int64_t mc_scrub_rows = 0;
  std::int64_t max_refresh_debt = 0;
  std::int64_t maint_ops = 0;
  std::map<std::string, std::int64_t> maint_rows;  // MAINT_ACT count per source

  std::int64_t requests_completed = 0;
  std::int64_t requests_outstanding = 0;
  double latency_mean = 0;
  double latency_p99 = 0;
  double latency_max = 0;

  EnergyBreakdown energy;
  std::vector<AuditResult> audits;
  std::uint64_t log_hash = 0;
  std::uint64_t events = 0;

  bool audits_pass() const;
  const AuditResult* audit(const std::string& name) const;
};

std::string to_json(const Report& r, int indent = 2);
Report report_from_json(const std::string& text);
Report load_report(const std::string& path);
void save_report(const std::string& path, const Report& r);

// Σ run_ipc_i / alone_ipc_i
double weighted_speedup(const std::vector<double>& run_ipc, const std::vector<double>& alone_ipc);

struct Comparison {
  double speedup = 0;          // mean per-core IPC ratio
  double throughput_ratio = 0; // candidate / baseline sum of IPCs
  double energy_delta = 0;     // candidate - baseline, pJ
  double energy_ratio = 0;
  double nack_rate_delta = 0;
};
Comparison compare(const Report& baseline, const Report& candidate);
std::string to_json(const Comparison& c, int indent = 2);

}  // namespace smd::simkit
