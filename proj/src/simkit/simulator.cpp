#include "smd/simkit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smd::simkit {

using dram::Cmd;
using dram::Source;

struct Simulator::Counter : dram::EventSink {
  std::map<std::string, std::int64_t> maint_rows;
  void on_event(const dram::CommandEvent& e) override {
    if (e.kind == Cmd::MAINT_ACT) ++maint_rows[dram::source_name(e.origin.source)];
  }
};

std::vector<workload::Trace> build_traces(const SimConfig& c) {
  std::vector<workload::Trace> out;
  dram::AddressMapper m(c.geometry, c.address_order);
  for (const auto& w : c.workloads) {
    if (!w.trace_file.empty()) {
      out.push_back(workload::read_trace_file(w.trace_file));
    } else if (w.gen == "random") {
      out.push_back(workload::gen_random(w.len, w.seed, w.footprint, w.shape, w.base));
    } else if (w.gen == "stream") {
      out.push_back(workload::gen_stream(w.len, w.stride, w.base, w.shape, w.seed));
    } else if (w.gen == "mix") {
      out.push_back(workload::gen_mix(w.len, w.seed, w.footprint, w.stream_frac, w.stride, w.shape, w.base));
    } else {
      out.push_back(workload::gen_hammer(w.hammer, c.geometry, m));
    }
    if (out.back().empty()) throw ConfigError("workload produced an empty trace");
  }
  return out;
}

std::vector<std::vector<int>> build_weak_rows(const SimConfig& c) {
  std::vector<std::vector<int>> w(c.geometry.banks());
  if (!c.refresh_mech || !c.refresh_mech->variable) return w;
  if (!c.weak_rows.file.empty()) {
    auto rows = workload::read_weak_rows_file(c.weak_rows.file);
    for (int r : rows)
      if (r >= c.geometry.rows_per_bank) throw ConfigError("weak-row file: row outside the bank");
    for (auto& b : w) b = rows;
  } else {
    for (int b = 0; b < c.geometry.banks(); ++b)
      w[b] = workload::gen_weak_rows(c.weak_rows.seed + static_cast<std::uint64_t>(b), c.weak_rows.fraction,
                                     c.geometry.rows_per_bank);
  }
  return w;
}

maint::FaultMap build_fault_map(const SimConfig& c) {
  maint::FaultMap fm;
  if (!c.ms) return fm;
  std::vector<workload::FaultEntry> faults;
  if (!c.ms->fault_file.empty()) faults = workload::read_fault_map_file(c.ms->fault_file);
  if (c.ms->fault_count > 0) {
    auto g = workload::gen_faults(c.ms->fault_seed, c.ms->fault_count, c.geometry.banks(), c.geometry.rows_per_bank,
                                  c.ms->params.codewords);
    faults.insert(faults.end(), g.begin(), g.end());
  }
  for (const auto& f : faults) {
    if (f.row >= c.geometry.rows_per_bank || f.codeword >= c.ms->params.codewords || f.bank >= c.geometry.banks())
      throw ConfigError("fault map entry outside the geometry");
    for (int b = 0; b < c.geometry.banks(); ++b) {
      if (f.bank >= 0 && f.bank != b) continue;
      auto& v = fm[{b, f.row}];
      if (std::find(v.begin(), v.end(), f.codeword) == v.end()) v.push_back(f.codeword);
    }
  }
  for (auto& [k, v] : fm) std::sort(v.begin(), v.end());
  return fm;
}

Simulator::Simulator(SimConfig cfg, std::ostream* csv, std::vector<dram::EventSink*> extra)
    : cfg_(std::move(cfg)), mapper_(cfg_.geometry, cfg_.address_order) {
  validate(cfg_);
  const auto& g = cfg_.geometry;
  traces_ = build_traces(cfg_);
  weak_rows_ = build_weak_rows(cfg_);
  faults_ = build_fault_map(cfg_);

  bus_.add(&hasher_);
  energy_ = std::make_unique<EnergyModel>(g, cfg_.timing, cfg_.energy);
  bus_.add(energy_.get());
  counter_ = std::make_unique<Counter>();
  bus_.add(counter_.get());
  if (csv) {
    csv_ = std::make_unique<dram::CsvWriter>(*csv);
    bus_.add(csv_.get());
  }
  attach_auditors();
  for (auto* s : extra) bus_.add(s);

  if (cfg_.smd) {
    bool lockstep = cfg_.divergence == Divergence::Lockstep;
    for (int ch = 0; ch < g.channels; ++ch)
      for (int r = 0; r < g.ranks; ++r) {
        auto rk = std::make_unique<chip::SmdRank>(g, cfg_.timing, cfg_.chip, lockstep, ch, r, &bus_);
        for (int i = 0; i < rk->chip_instances(); ++i) build_chip(rk->chip(i), ch, r, lockstep ? -1 : i);
        ranks_.push_back(std::move(rk));
      }
  }
  for (int ch = 0; ch < g.channels; ++ch) {
    std::vector<chip::SmdRank*> rs;
    for (int r = 0; r < g.ranks && cfg_.smd; ++r) rs.push_back(ranks_[ch * g.ranks + r].get());
    mc::ControllerConfig mc = cfg_.mc;
    ctrl_.push_back(std::make_unique<mc::Controller>(ch, g, cfg_.timing, mc, rs, &bus_));
  }
  for (std::size_t i = 0; i < traces_.size(); ++i)
    cores_.push_back(std::make_unique<workload::Core>(static_cast<int>(i), &traces_[i], cfg_.core));
}

Simulator::~Simulator() = default;

void Simulator::build_chip(chip::SmdChip& c, int channel, int rank, int chip_index) {
  const auto& g = cfg_.geometry;
  const auto& t = cfg_.timing;
  std::uint64_t salt = (static_cast<std::uint64_t>(channel) * 64 + rank) * 64 + static_cast<std::uint64_t>(chip_index + 1);
  if (cfg_.refresh_mech) {
    maint::RefreshParams p = *cfg_.refresh_mech;
    if (chip_index >= 0 && cfg_.divergence == Divergence::WorstCase) {
      p.first_delay = static_cast<Cycle>(chip_index) * p.rg * t.tRC();
      p.initial_lrc = chip_index % g.regions_per_bank();
    } else if (chip_index >= 0 && cfg_.divergence == Divergence::Custom) {
      p.first_delay = cfg_.offsets[chip_index];
    }
    c.add_mechanism(std::make_unique<maint::RefreshMechanism>(g, t, p, weak_rows_));
  }
  if (cfg_.prp) {
    maint::VictimParams p = *cfg_.prp;
    p.seed = maint::mix64(p.seed ^ (salt * 0x9e3779b97f4a7c15ULL));
    c.add_mechanism(std::make_unique<maint::PrpMechanism>(g, t, p));
  }
  if (cfg_.drp) c.add_mechanism(std::make_unique<maint::DrpMechanism>(g, t, *cfg_.drp));
  if (cfg_.ms) c.add_mechanism(std::make_unique<maint::ScrubMechanism>(g, t, cfg_.ms->params, faults_));
  if (cfg_.adversary) c.add_mechanism(std::make_unique<maint::AdversaryMechanism>(g, t, *cfg_.adversary));
}

std::vector<std::unique_ptr<Auditor>> make_auditors(const SimConfig& c, const std::vector<std::vector<int>>& weak_rows,
                                                   const maint::FaultMap& faults) {
  std::vector<std::unique_ptr<Auditor>> out;
  const auto& g = c.geometry;
  const auto& t = c.timing;
  const auto& a = c.audits;
  int chips = (c.smd && c.divergence != Divergence::Lockstep) ? g.chips_per_rank : 1;
  int blast = a.blast;
  if (c.drp) blast = std::max(blast, c.drp->blast);
  if (c.prp) blast = std::max(blast, c.prp->blast);
  if (a.timing) out.push_back(std::make_unique<TimingAuditor>(g, t));
  if (a.protocol)
    out.push_back(std::make_unique<ProtocolAuditor>(g, t, chips, c.chip.bitline == chip::Bitline::Open, blast));
  if (a.retry && c.smd) out.push_back(std::make_unique<RetryAuditor>(g, t));
  if (a.refresh && (!c.smd || c.refresh_mech)) {
    RefreshAuditSpec s;
    s.chips = chips;
    if (c.smd) {
      s.kind = c.refresh_mech->variable ? RefreshKind::Vr : RefreshKind::Fr;
      s.vr_factor = c.refresh_mech->vr_factor;
      s.weak_rows = weak_rows;
    }
    out.push_back(std::make_unique<RefreshAuditor>(g, t, s));
  }
  std::string rh = a.rowhammer;
  if (rh == "auto") {
    if (c.drp)
      rh = "enforce";
    else if (c.prp || c.mc.para_p > 0)
      rh = "report";
    else
      rh = "off";
  }
  if (rh != "off")
    out.push_back(std::make_unique<RowHammerAuditor>(g, t, chips, a.act_max, a.blast, rh == "enforce"));
  if (a.scrub && c.smd && c.ms) {
    ScrubAuditSpec s;
    s.codewords = c.ms->params.codewords;
    s.wb_cycles = c.ms->params.wb_cycles;
    s.t_scrub = c.ms->params.t_scrub;
    s.max_pending = c.ms->params.max_pending;
    s.faults = faults;
    s.chips = chips;
    out.push_back(std::make_unique<ScrubAuditor>(g, t, s));
  }
  return out;
}

void Simulator::attach_auditors() {
  auditors_ = make_auditors(cfg_, weak_rows_, faults_);
  for (auto& au : auditors_) bus_.add(au.get());
}

bool Simulator::issue(int core, bool write, std::uint64_t addr, std::uint64_t id, Cycle now) {
  std::uint64_t cap = cfg_.geometry.capacity();
  dram::DramAddress a = mapper_.decode(addr % cap);
  mc::Controller& c = *ctrl_[a.channel];
  if (!c.can_accept(write)) return false;
  mc::Request r;
  r.id = id;
  r.write = write;
  r.addr = a;
  r.core = core;
  r.origin = Source::MC;
  c.enqueue(r, now);
  ++issued_;
  return true;
}

bool Simulator::idle() const {
  for (const auto& c : cores_)
    if (!c->finished()) return false;
  for (const auto& c : ctrl_)
    if (!c->quiescent()) return false;
  for (const auto& r : ranks_)
    if (r->nacks_pending()) return false;
  return true;
}

Report Simulator::run() {
  const Cycle end_fixed = cfg_.cycles;
  Cycle now = 0;
  bool finished = true;
  auto done = [&]() {
    if (end_fixed > 0) return now >= end_fixed;
    return idle();
  };
  while (!done()) {
    if (now >= cfg_.max_cycles) {
      finished = false;
      break;
    }
    for (auto& r : ranks_) r->step(now);
    for (std::size_t i = 0; i < ranks_.size(); ++i) {
      chip::NackNotice n;
      while (ranks_[i]->pop_nack(now, n)) ctrl_[i / cfg_.geometry.ranks]->on_nack(n, now);
    }
    for (auto& c : ctrl_) {
      mc::Request q;
      while (c->pop_completion(now, q)) {
        ++completed_;
        if (!q.write) {
          cores_[q.core]->on_complete(q.id);
          latencies_.push_back(q.completion - q.arrival);
        }
      }
    }
    for (auto& c : cores_) c->tick(*this, now);
    for (auto& c : ctrl_) c->tick(now);
    ++now;
    if (idle()) {
      Cycle next = end_fixed > 0 ? end_fixed : now;
      for (const auto& r : ranks_) next = std::min(next, r->next_wake());
      for (const auto& c : ctrl_) next = std::min(next, c->next_timed_event());
      if (end_fixed == 0) break;
      if (next > now) now = next;
    }
  }
  bus_.finish(now);

  Report rep;
  rep.name = cfg_.name;
  rep.mode = cfg_.smd ? "smd" : "ddr4-baseline";
  rep.cycles = now;
  rep.finished = finished;
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    const auto& s = cores_[i]->stats();
    CoreReport cr;
    cr.core = static_cast<int>(i);
    cr.retired = s.retired;
    cr.loads = s.loads;
    cr.stores = s.stores;
    cr.ipc = now > 0 ? static_cast<double>(s.retired) / static_cast<double>(now) : 0.0;
    rep.throughput += cr.ipc;
    rep.cores.push_back(cr);
  }
  for (const auto& c : ctrl_) {
    const auto& s = c->stats();
    rep.acts += s.acts;
    rep.nacks += s.nacks;
    rep.partial_nacks += s.partial_nacks;
    rep.retries += s.retries;
    rep.retry_slips += s.retry_slips;
    rep.reads += s.reads;
    rep.writes += s.writes;
    rep.refs += s.refs;
    rep.para_acts += s.para_acts;
    rep.mc_scrub_rows += s.scrub_rows;
    rep.max_refresh_debt = std::max(rep.max_refresh_debt, s.max_debt);
    rep.requests_outstanding += static_cast<std::int64_t>(c->queued());
  }
  rep.nack_rate = rep.acts > 0 ? static_cast<double>(rep.nacks) / static_cast<double>(rep.acts) : 0.0;
  for (const auto& r : ranks_)
    for (int i = 0; i < r->chip_instances(); ++i) rep.maint_ops += r->chip(i).stats().ops;
  rep.maint_rows = counter_->maint_rows;
  rep.requests_completed = completed_;
  rep.requests_outstanding = issued_ - completed_;
  if (!latencies_.empty()) {
    double sum = std::accumulate(latencies_.begin(), latencies_.end(), 0.0);
    rep.latency_mean = sum / static_cast<double>(latencies_.size());
    std::vector<std::int64_t> v = latencies_;
    std::size_t k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size()))) - 1;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    rep.latency_p99 = static_cast<double>(v[k]);
    rep.latency_max = static_cast<double>(*std::max_element(latencies_.begin(), latencies_.end()));
  }
  rep.energy = energy_->breakdown();
  for (const auto& a : auditors_) rep.audits.push_back(a->result());
  if (end_fixed == 0) {
    AuditResult p;
    p.name = "progress";
    p.verdict = finished && rep.requests_outstanding == 0 ? Verdict::Pass : Verdict::Fail;
    if (p.verdict == Verdict::Fail) {
      p.violations = rep.requests_outstanding;
      p.samples.push_back(std::to_string(rep.requests_outstanding) + " requests still outstanding at cycle " +
                          std::to_string(now));
    }
    p.metrics["max_latency_cycles"] = rep.latency_max;
    rep.audits.push_back(p);
  }
  rep.log_hash = hasher_.value();
  rep.events = hasher_.count();
  return rep;
}

Report run_config(const SimConfig& c, std::ostream* csv) {
  Report r = Simulator(c, csv).run();
  if (c.alone_runs && !c.workloads.empty()) {
    for (std::size_t i = 0; i < c.workloads.size(); ++i) {
      SimConfig one = c;
      one.alone_runs = false;
      one.workloads = {c.workloads[i]};
      one.name = c.name + "-alone" + std::to_string(i);
      one.audits = AuditSpec{false, false, false, false, "off", false, c.audits.act_max, c.audits.blast};
      r.alone_ipc.push_back(Simulator(one).run().cores.at(0).ipc);
    }
    std::vector<double> ipc;
    for (const auto& cr : r.cores) ipc.push_back(cr.ipc);
    r.weighted_speedup = weighted_speedup(ipc, r.alone_ipc);
  }
  return r;
}

}  // namespace smd::simkit
