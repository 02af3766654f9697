#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "smd/simkit/audit.hpp"
#include "smd/simkit/config.hpp"
#include "smd/simkit/energy.hpp"
#include "smd/simkit/report.hpp"

namespace smd::simkit {

// Builds the traces of a config (files are read, generators are run).
std::vector<workload::Trace> build_traces(const SimConfig& c);
// Weak rows per bank for SMD-VR and the refresh auditor.
std::vector<std::vector<int>> build_weak_rows(const SimConfig& c);
maint::FaultMap build_fault_map(const SimConfig& c);
// The auditors a config asks for; shared by live runs and log replay.
std::vector<std::unique_ptr<Auditor>> make_auditors(const SimConfig& c, const std::vector<std::vector<int>>& weak_rows,
                                                   const maint::FaultMap& faults);

class Simulator : public workload::MemoryPort {
 public:
  // csv: optional event-log destination; extra: additional sinks fed with every event.
  explicit Simulator(SimConfig cfg, std::ostream* csv = nullptr, std::vector<dram::EventSink*> extra = {});
  ~Simulator() override;

  Report run();

  bool issue(int core, bool write, std::uint64_t addr, std::uint64_t id, Cycle now) override;

  const SimConfig& config() const { return cfg_; }
  mc::Controller& controller(int ch) { return *ctrl_[ch]; }
  chip::SmdRank* rank(int ch, int r) { return ranks_.empty() ? nullptr : ranks_[ch * cfg_.geometry.ranks + r].get(); }
  const dram::AddressMapper& mapper() const { return mapper_; }

 private:
  struct Counter;
  void build_chip(chip::SmdChip& c, int channel, int rank, int chip_index);
  void attach_auditors();
  bool idle() const;

  SimConfig cfg_;
  dram::AddressMapper mapper_;
  std::vector<workload::Trace> traces_;
  std::vector<std::vector<int>> weak_rows_;
  maint::FaultMap faults_;
  dram::EventBus bus_;
  dram::LogHasher hasher_;
  std::unique_ptr<dram::CsvWriter> csv_;
  std::unique_ptr<EnergyModel> energy_;
  std::unique_ptr<Counter> counter_;
  std::vector<std::unique_ptr<Auditor>> auditors_;
  std::vector<std::unique_ptr<chip::SmdRank>> ranks_;
  std::vector<std::unique_ptr<mc::Controller>> ctrl_;
  std::vector<std::unique_ptr<workload::Core>> cores_;
  std::vector<std::int64_t> latencies_;
  std::int64_t issued_ = 0;
  std::int64_t completed_ = 0;
};

// Convenience wrapper: run one config, optionally writing the event log.
Report run_config(const SimConfig& c, std::ostream* csv = nullptr);

}  // namespace smd::simkit
