#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "smd/dram/command.hpp"
#include "smd/dram/geometry.hpp"
#include "smd/dram/timing.hpp"

namespace smd::simkit {

enum class Verdict { Pass, Fail, Inconclusive, Report, Skipped };
const char* verdict_name(Verdict v);

struct AuditResult {
  std::string name;
  Verdict verdict = Verdict::Pass;
  std::int64_t violations = 0;
  std::vector<std::string> samples;  // first few violations
  std::map<std::string, double> metrics;
};

class Auditor : public dram::EventSink {
 public:
  virtual AuditResult result() const = 0;
};

// Subarrays made unavailable by maintenance in `region` (own span plus one
// neighbour on each side with open bitlines).
struct SpanRule {
  int rows_per_subarray = 512;
  int subarrays_per_region = 16;
  int subarrays = 256;
  bool open_bitline = true;
  bool covers(int region, int row) const;
};
SpanRule span_rule(const dram::Geometry& g, bool open_bitline);

// Rebuilds per-chip row-open state of controller ACTs from ACT/NACK/PRE events.
// An ACT is resolved once its NACK window has passed.
class AcceptTracker {
 public:
  struct Resolved {
    int channel, rank, bank, row;
    Cycle act;
    Cycle resolved_at;
    std::uint32_t accepted;  // chips that newly opened the row
    dram::Source source;
  };
  struct Open {
    int row = -1;
    std::uint32_t mask = 0;
    Cycle act = -1;
    Cycle pre = -1;  // -1 while open
  };

  // chips: 1 when all chips share one state, else chips_per_rank.
  AcceptTracker(const dram::Geometry& g, const dram::TimingParams& t, int chips);
  // Feeds one event. Resolutions due before it are reported first. Returns false
  // for a NACK that matches no pending ACT.
  template <typename F>
  bool feed(const dram::CommandEvent& e, F&& on_resolved);
  // Resolves every ACT whose NACK would have been logged before `end`; later
  // ones are dropped (their outcome is not in the log).
  template <typename F>
  void flush(F&& on_resolved, Cycle end = kNever);

  const Open& open(int ch, int rank, int bank) const { return open_[index(ch, rank, bank)]; }
  std::uint32_t all() const { return all_; }
  int chips() const { return chips_; }
  std::uint32_t chip_bits(const dram::Origin& o) const;  // bits an event's chip field stands for
  std::uint32_t nack_bits(std::uint32_t aux) const;

 private:
  struct Pending {
    Resolved r;
    std::uint32_t want;
    std::uint32_t nacked = 0;
  };
  std::size_t index(int ch, int rank, int bank) const {
    return (static_cast<std::size_t>(ch) * ranks_ + rank) * banks_ + bank;
  }
  template <typename F>
  void resolve_front(F& f, Cycle now);
  void apply(const Pending& p);

  int ranks_, banks_, chips_;
  Cycle tnack_;
  std::uint32_t all_;
  std::vector<Open> open_;
  std::vector<Pending> pending_;
};

class TimingAuditor : public Auditor {
 public:
  TimingAuditor(const dram::Geometry& g, const dram::TimingParams& t);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  AuditResult result() const override;

 private:
  struct Bank {
    int row = -1;
    bool partial = false;
    Cycle act = -kNever, pre = -kNever, rd = -kNever, wr = -kNever, opened = -kNever;
  };
  struct Rank {
    std::vector<Bank> banks, saved;
    std::vector<Cycle> bg_col;
    Cycle act = -kNever, wr = -kNever, ref_until = -kNever;
  };
  struct Channel {
    std::vector<Rank> ranks;
    Cycle rd = -kNever, wr = -kNever;
  };
  void fail(const dram::CommandEvent& e, const std::string& why);

  dram::Geometry g_;
  dram::TimingParams t_;
  std::vector<Channel> ch_;
  AuditResult res_;
  std::int64_t checked_ = 0;
};

class ProtocolAuditor : public Auditor {
 public:
  // chips: 1 for lockstep/baseline, chips_per_rank with divergence.
  ProtocolAuditor(const dram::Geometry& g, const dram::TimingParams& t, int chips, bool open_bitline, int blast);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  AuditResult result() const override;

 private:
  struct MaintRow {
    std::uint32_t chips;
    int row;
    Cycle since, until;
    bool whole_bank;  // scrub holds every region of the bank
  };
  struct Unexplained {
    int channel, rank, bank, row;
    std::uint32_t chips;
    Cycle nack;
  };
  void fail(Cycle c, const std::string& why);
  void check_resolved(const AcceptTracker::Resolved& r);
  std::size_t bank_index(int ch, int rank, int bank) const;

  dram::Geometry g_;
  dram::TimingParams t_;
  SpanRule span_;
  int blast_;
  AcceptTracker tracker_;
  std::vector<std::vector<MaintRow>> maint_;
  // last maintenance event per (bank slot, chip, region)
  std::vector<Cycle> last_maint_;
  std::vector<Unexplained> unexplained_;
  AuditResult res_;
  std::int64_t nacks_ = 0, explained_late_ = 0;
};

class RetryAuditor : public Auditor {
 public:
  RetryAuditor(const dram::Geometry& g, const dram::TimingParams& t);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  AuditResult result() const override;

 private:
  struct Train {
    bool active = false;
    int row = -1;
    Cycle start = 0, last = 0;
    bool awaiting = false;  // last ACT of the train has not been NACK'd yet
  };
  void sweep(Cycle now);
  void fail(Cycle c, const std::string& why);

  dram::Geometry g_;
  dram::TimingParams t_;
  std::vector<Train> trains_;
  std::vector<std::size_t> live_;
  AuditResult res_;
  std::int64_t trains_done_ = 0, retries_ = 0;
  Cycle longest_ = 0;
};

enum class RefreshKind { Baseline, Fr, Vr };

struct RefreshAuditSpec {
  RefreshKind kind = RefreshKind::Baseline;
  int vr_factor = 4;
  std::vector<std::vector<int>> weak_rows;  // per bank
  int chips = 1;
};

class RefreshAuditor : public Auditor {
 public:
  RefreshAuditor(const dram::Geometry& g, const dram::TimingParams& t, RefreshAuditSpec spec);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  AuditResult result() const override;
  Cycle bound(int bank, int row) const;
  Cycle max_gap() const { return max_gap_; }

 private:
  void refresh(std::size_t slot, int row, Cycle now);
  std::vector<Cycle>& rows(std::size_t slot);
  void violation(std::size_t slot, int row, Cycle gap);

  dram::Geometry g_;
  dram::TimingParams t_;
  RefreshAuditSpec spec_;
  std::vector<std::vector<char>> weak_;
  std::vector<std::vector<Cycle>> last_;  // slot = ((ch*ranks+rank)*chips+chip)*banks+bank
  Cycle max_gap_ = 0;
  Cycle end_ = 0;
  AuditResult res_;
  std::int64_t refreshes_ = 0;
};

class RowHammerAuditor : public Auditor {
 public:
  // enforce=false reports the maximum without a pass bound.
  RowHammerAuditor(const dram::Geometry& g, const dram::TimingParams& t, int chips, std::uint32_t act_max,
                   int blast, bool enforce);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  AuditResult result() const override;
  std::int64_t max_count() const { return max_; }

 private:
  struct Agg {
    std::int64_t count = 0;
    std::uint32_t refreshed = 0;
    std::int64_t window = 0;
  };
  std::uint64_t key(int ch, int rank, int chip, int bank, int row) const;
  void activation(const AcceptTracker::Resolved& r);
  void victim_refresh(int ch, int rank, std::uint32_t chips, int bank, int row, Cycle now);
  std::uint32_t full_mask(int row) const;

  dram::Geometry g_;
  dram::TimingParams t_;
  std::uint32_t act_max_;
  int blast_;
  bool enforce_;
  AcceptTracker tracker_;
  std::unordered_map<std::uint64_t, Agg> aggs_;
  std::int64_t max_ = 0;
  std::int64_t acts_ = 0, victim_refreshes_ = 0;
  AuditResult res_;
};

struct ScrubAuditSpec {
  int codewords = 128;
  Cycle wb_cycles = 4;
  Cycle t_scrub = 0;
  int max_pending = 8;
  std::map<std::pair<int, int>, std::vector<int>> faults;  // (bank,row) -> codewords, every chip
  int chips = 1;
};

class ScrubAuditor : public Auditor {
 public:
  ScrubAuditor(const dram::Geometry& g, const dram::TimingParams& t, ScrubAuditSpec spec);
  void on_event(const dram::CommandEvent& e) override;
  void finish(Cycle end) override;
  AuditResult result() const override;
  Cycle gap_bound() const;

 private:
  struct Current {
    bool active = false;
    int row = -1;
    Cycle start = 0;
    int reads = 0;
    std::vector<int> wbs;
  };
  void fail(Cycle c, const std::string& why);
  std::size_t slot(const dram::CommandEvent& e, int chip) const;

  dram::Geometry g_;
  dram::TimingParams t_;
  ScrubAuditSpec spec_;
  std::vector<Current> cur_;
  std::vector<std::vector<Cycle>> last_;
  std::set<std::tuple<std::size_t, int, int>> cleared_;
  std::set<std::pair<std::size_t, int>> scrubbed_;
  AuditResult res_;
  std::int64_t rows_ = 0, clean_rows_ = 0, faulty_rows_ = 0;
  Cycle max_gap_ = 0, min_dur_ = kNever, max_dur_ = 0, end_ = 0;
};

// ---- AcceptTracker templates ---------------------------------------------------

template <typename F>
void AcceptTracker::resolve_front(F& f, Cycle now) {
  while (!pending_.empty() && pending_.front().r.act + tnack_ < now) {
    Pending p = pending_.front();
    pending_.erase(pending_.begin());
    p.r.resolved_at = p.r.act + tnack_;
    p.r.accepted = p.want & ~p.nacked;
    apply(p);
    f(p.r);
  }
}

template <typename F>
bool AcceptTracker::feed(const dram::CommandEvent& e, F&& f) {
  resolve_front(f, e.cycle);
  if (e.kind == dram::Cmd::ACT) {
    const Open& o = open_[index(e.channel, e.rank, e.bank)];
    std::uint32_t want = (o.row == e.row && o.pre < 0) ? (all_ & ~o.mask) : all_;
    Pending p{Resolved{e.channel, e.rank, e.bank, e.row, e.cycle, e.cycle, 0, e.origin.source}, want, 0};
    pending_.push_back(p);
  } else if (e.kind == dram::Cmd::NACK) {
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      Pending& p = pending_[i];
      if (p.r.act + tnack_ == e.cycle && p.r.channel == e.channel && p.r.rank == e.rank &&
          p.r.bank == e.bank && p.r.row == e.row) {
        p.nacked |= nack_bits(e.origin.aux);
        Pending done = p;
        pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(i));
        done.r.resolved_at = e.cycle;
        done.r.accepted = done.want & ~done.nacked;
        apply(done);
        f(done.r);
        return true;
      }
    }
    return false;
  } else if (e.kind == dram::Cmd::PRE) {
    Open& o = open_[index(e.channel, e.rank, e.bank)];
    if (o.row >= 0 && o.pre < 0) o.pre = e.cycle;
  }
  return true;
}

template <typename F>
void AcceptTracker::flush(F&& f, Cycle end) {
  resolve_front(f, end);
  pending_.clear();
}

}  // namespace smd::simkit
