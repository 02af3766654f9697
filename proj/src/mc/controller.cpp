#include "smd/mc/controller.hpp"

#include <algorithm>

#include "smd/maint/mechanism.hpp"

namespace smd::mc {

using dram::Cmd;
using dram::Source;

Controller::Controller(int channel, const dram::Geometry& g, const dram::TimingParams& t,
                       ControllerConfig cfg, std::vector<chip::SmdRank*> ranks, dram::EventSink* sink)
    : channel_(channel),
      g_(g),
      t_(t),
      cfg_(cfg),
      ranks_(std::move(ranks)),
      sink_(sink),
      dram_(g, t),
      banks_(static_cast<std::size_t>(g.ranks) * g.banks()),
      refresh_(g.ranks),
      rng_(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(channel)),
      para_coin_(std::clamp(cfg.para_p, 0.0, 1.0)) {
  if (cfg_.smd && static_cast<int>(ranks_.size()) != g.ranks)
    throw ConfigError("controller: SMD mode needs one chip model per rank");
  if (cfg_.smd && cfg_.para_p > 0) throw ConfigError("controller: MC-PARA is a DDR4-baseline option");
  if (cfg_.cap < 1) throw ConfigError("controller: cap must be >= 1");
  for (int r = 0; r < g.ranks; ++r) refresh_[r].next_tick = t.tREFI + r * t.tREFI / g.ranks;
  if (cfg_.scrub_row_interval > 0) {
    int n = g.ranks * g.banks();
    for (int i = 0; i < n; ++i)
      banks_[i].scrub_next = cfg_.scrub_row_interval + cfg_.scrub_row_interval * i / n;
  }
}

bool Controller::can_accept(bool write) const {
  return write ? static_cast<int>(writeq_.size()) < cfg_.write_queue
               : static_cast<int>(readq_.size()) < cfg_.read_queue;
}

bool Controller::enqueue(Request r, Cycle now) {
  if (!can_accept(r.write)) return false;
  r.arrival = now;
  r.bank = dram::flat_bank(g_, r.addr);
  r.region = g_.region_of(r.addr.row);
  (r.write ? writeq_ : readq_).push_back(r);
  return true;
}

void Controller::issue(Cmd cmd, int rank, int bank, int row, Cycle now, Source src) {
  if (now == last_cmd_) throw InvariantError("two commands in one cycle on a channel");
  last_cmd_ = now;
  dram_.apply(cmd, rank, bank, row, now);
  BankCtl& bc = ctl(rank, bank);
  if (sink_) {
    dram::CommandEvent e;
    e.cycle = now;
    e.kind = cmd;
    e.channel = static_cast<std::int16_t>(channel_);
    e.rank = static_cast<std::int16_t>(rank);
    e.bank = static_cast<std::int16_t>(cmd == Cmd::REF ? -1 : bank);
    e.row = row;
    e.origin.source = src;
    sink_->on_event(e);
  }
  switch (cmd) {
    case Cmd::ACT:
      ++stats_.acts;
      bc.last_access = now;
      if (cfg_.smd) ranks_[rank]->on_act(bank, row, now);
      if (src == Source::MC_PARA) ++stats_.para_acts;
      if (src == Source::MC && cfg_.para_p > 0 && para_coin_(rng_))
        for (int v : maint::victims_of(row, cfg_.para_blast, g_.rows_per_bank)) bc.para_rows.push_back(v);
      break;
    case Cmd::PRE:
      ++stats_.pres;
      if (cfg_.smd) ranks_[rank]->on_pre(bank, now);
      break;
    case Cmd::RD:
      ++stats_.reads;
      bc.last_access = now;
      break;
    case Cmd::WR:
      ++stats_.writes;
      bc.last_access = now;
      break;
    case Cmd::REF:
      ++stats_.refs;
      break;
    default:
      break;
  }
}

bool Controller::try_issue(Cmd cmd, int rank, int bank, int row, Cycle now, Source src) {
  if (dram_.earliest(cmd, rank, bank, row, now) > now) return false;
  issue(cmd, rank, bank, row, now, src);
  return true;
}

Cycle Controller::close_deadline(int rank, int bank) const {
  const Train& tr = ctl(rank, bank).train;
  if (!tr.active || tr.await_until >= 0) return kNever;
  const auto& bs = dram_.bank(rank, bank);
  if (bs.open_row < 0) return kNever;
  if (tr.wait_partial && bs.open_row == tr.row) return kNever;
  return tr.next_retry - t_.tRP;
}

bool Controller::act_allowed(int rank, int bank, int row, Cycle now) const {
  if (!cfg_.smd && cfg_.refresh && refresh_[rank].debt > 0) return false;
  const BankCtl& bc = ctl(rank, bank);
  if (!bc.para_rows.empty() || bc.para_open) return false;
  int region = g_.region_of(row);
  if ((bc.known_locked >> region) & 1ULL) return false;
  if (bc.train.active) {
    if (region == bc.train.region) return false;
    if (bc.train.await_until >= 0) return false;
    if (now + t_.tRC() + cfg_.retry_margin > bc.train.next_retry) return false;
  }
  // Keep retry slots of every active train free: no other ACT may land on a
  // future retry cycle, and same-rank trains stay tRRD apart.
  for (int idx : trains_) {
    const Train& tr = banks_[idx].train;
    Cycle next = tr.await_until >= 0 ? tr.last_act + t_.ARI : tr.next_retry;
    Cycle d = ((next - now) % t_.ARI + t_.ARI) % t_.ARI;
    if (d == 0) return false;
    if (idx / g_.banks() == rank && (d < t_.tRRD || t_.ARI - d < t_.tRRD)) return false;
  }
  return true;
}

bool Controller::column_allowed(int rank, int bank, bool write, Cycle now) const {
  Cycle deadline = close_deadline(rank, bank);
  const auto& bs = dram_.bank(rank, bank);
  if (cfg_.enforce_max_open) deadline = std::min(deadline, bs.act_at + t_.max_open - 12);
  if (deadline == kNever) return true;
  Cycle pre_at = std::max(bs.next_pre, now + (write ? t_.wr_to_pre() : t_.tRTP));
  return pre_at <= deadline - 4;
}

bool Controller::pending_hit(int rank, int bank, int row, const std::deque<Request>* only) const {
  const auto& bs = dram_.bank(rank, bank);
  if (bs.hits >= cfg_.cap) return false;
  for (const auto* q : {&readq_, &writeq_}) {
    if (only && q != only) continue;
    for (const auto& r : *q)
      if (r.addr.rank == rank && r.bank == bank && r.addr.row == row) return true;
  }
  return false;
}

std::size_t Controller::other_region_requests(int rank, int bank, int region) const {
  std::size_t n = 0;
  for (const auto* q : {&readq_, &writeq_})
    for (const auto& r : *q)
      if (r.addr.rank == rank && r.bank == bank && r.region != region) ++n;
  return n;
}

void Controller::on_nack(const chip::NackNotice& n, Cycle now) {
  if (!cfg_.smd) throw ProtocolError("NACK received in DDR4-baseline mode");
  if (n.cycle != now) throw ProtocolError("NACK delivered off its tNACK slot");
  int rank = n.rank, bank = n.bank;
  const auto& bs = dram_.bank(rank, bank);
  if (bs.act_at != n.act_cycle || bs.open_row != n.row)
    throw ProtocolError("NACK with no matching outstanding ACT");
  if (sink_) {
    dram::CommandEvent e;
    e.cycle = now;
    e.kind = Cmd::NACK;
    e.channel = static_cast<std::int16_t>(channel_);
    e.rank = static_cast<std::int16_t>(rank);
    e.bank = static_cast<std::int16_t>(bank);
    e.row = n.row;
    e.origin.source = Source::CHIPS;
    e.origin.aux = n.chips;
    sink_->on_event(e);
  }
  ++stats_.nacks;
  bool full = n.chips == ranks_[rank]->all_chips_mask();
  if (!full) ++stats_.partial_nacks;
  // A partial re-ACT cannot be fully rejected: accepting chips already hold the row.
  if (full) {
    dram_.revert_act(rank, bank);
  } else {
    dram_.mark_partial(rank, bank, true);
  }

  BankCtl& bc = ctl(rank, bank);
  Train& tr = bc.train;
  int region = g_.region_of(n.row);
  bool own_retry = tr.active && tr.await_until >= 0 && tr.last_act == n.act_cycle;
  if (!own_retry && tr.active) {
    // A second region of the same bank is locked; stay away until the train ends.
    bc.known_locked |= 1ULL << region;
    if (!full) bc.close_partial = true;
    return;
  }
  if (!tr.active) {
    tr = Train{};
    tr.active = true;
    tr.row = n.row;
    tr.region = region;
    tr.start = n.act_cycle;
    trains_.push_back(rank * g_.banks() + bank);
  }
  tr.last_act = n.act_cycle;
  tr.await_until = -1;
  tr.next_retry = n.act_cycle + t_.ARI;
  tr.wait_partial = false;
  bc.known_locked |= 1ULL << region;
  if (!full) {
    bool wait = cfg_.policy == DivergencePolicy::Wait;
    if (cfg_.policy == DivergencePolicy::Hybrid)
      wait = static_cast<int>(other_region_requests(rank, bank, region)) < cfg_.hybrid_n;
    tr.wait_partial = wait;
    bc.close_partial = !wait;
  } else {
    bc.close_partial = false;
  }
}

void Controller::end_train(int idx, Cycle now) {
  BankCtl& bc = banks_[idx];
  stats_.max_train = std::max<std::int64_t>(stats_.max_train, now - bc.train.start);
  bc.train = Train{};
  bc.known_locked = 0;
  trains_.erase(std::find(trains_.begin(), trains_.end(), idx));
  int rank = idx / g_.banks(), bank = idx % g_.banks();
  if (dram_.bank(rank, bank).partial) dram_.mark_partial(rank, bank, false);
}

bool Controller::retry_step(Cycle now) {
  for (int idx : trains_) {
    Train& tr = banks_[idx].train;
    if (tr.await_until >= 0 || tr.next_retry > now) continue;
    int rank = idx / g_.banks(), bank = idx % g_.banks();
    const auto& bs = dram_.bank(rank, bank);
    bool legal = false;
    if (bs.open_row < 0 || (bs.partial && bs.open_row == tr.row))
      legal = dram_.earliest(Cmd::ACT, rank, bank, tr.row, now) <= now && now != last_cmd_;
    if (!legal) {
      ++stats_.retry_slips;
      tr.next_retry = now + 1;
      continue;
    }
    issue(Cmd::ACT, rank, bank, tr.row, now, Source::MC);
    ++stats_.retries;
    tr.last_act = now;
    tr.await_until = now + t_.tNACK;
    return true;
  }
  return false;
}

bool Controller::urgent_step(Cycle now) {
  int nb = g_.banks();
  for (int rank = 0; rank < g_.ranks; ++rank)
    for (int bank = 0; bank < nb; ++bank) {
      const auto& bs = dram_.bank(rank, bank);
      if (bs.open_row < 0) continue;
      BankCtl& bc = ctl(rank, bank);
      bool need = bc.close_partial && bs.partial;
      Cycle deadline = close_deadline(rank, bank);
      if (deadline != kNever && now >= deadline - 4) need = true;
      if (cfg_.enforce_max_open && now - bs.act_at >= t_.max_open - 16) need = true;
      if (!need) continue;
      if (dram_.earliest(Cmd::PRE, rank, bank, bs.open_row, now) > now) continue;
      Source src = bc.para_open ? Source::MC_PARA : Source::MC;
      issue(Cmd::PRE, rank, bank, bs.open_row, now, src);
      if (bc.para_open) bc.para_open = false;
      if (bs.partial) dram_.mark_partial(rank, bank, false);
      bc.close_partial = false;
      ++stats_.forced_pres;
      return true;
    }
  return false;
}

bool Controller::refresh_step(Cycle now) {
  if (cfg_.smd || !cfg_.refresh) return false;
  int nb = g_.banks();
  for (int rank = 0; rank < g_.ranks; ++rank) {
    RankRefresh& rf = refresh_[rank];
    if (rf.debt == 0) continue;
    if (dram_.all_closed(rank)) {
      std::int64_t refs = static_cast<std::int64_t>(t_.refs_per_window);
      int rows_per_ref = static_cast<int>(std::max<std::int64_t>(1, g_.rows_per_bank / refs));
      int row = static_cast<int>((rf.count % refs) * rows_per_ref) % g_.rows_per_bank;
      if (try_issue(Cmd::REF, rank, 0, row, now, Source::MC)) {
        --rf.debt;
        ++rf.count;
        return true;
      }
      continue;
    }
    for (int bank = 0; bank < nb; ++bank) {
      const auto& bs = dram_.bank(rank, bank);
      if (bs.open_row < 0) continue;
      if (ctl(rank, bank).para_open) continue;
      if (rf.debt < cfg_.max_debt && pending_hit(rank, bank, bs.open_row, serving())) continue;
      if (try_issue(Cmd::PRE, rank, bank, bs.open_row, now, Source::MC)) return true;
    }
  }
  return false;
}

bool Controller::para_step(Cycle now) {
  if (cfg_.para_p <= 0) return false;
  int nb = g_.banks();
  for (int rank = 0; rank < g_.ranks; ++rank)
    for (int bank = 0; bank < nb; ++bank) {
      BankCtl& bc = ctl(rank, bank);
      if (!bc.para_open && bc.para_rows.empty()) continue;
      const auto& bs = dram_.bank(rank, bank);
      if (bc.para_open) {
        if (try_issue(Cmd::PRE, rank, bank, bc.para_row, now, Source::MC_PARA)) {
          bc.para_open = false;
          return true;
        }
        continue;
      }
      if (bs.open_row >= 0) {
        if (pending_hit(rank, bank, bs.open_row, serving())) continue;
        if (try_issue(Cmd::PRE, rank, bank, bs.open_row, now, Source::MC)) return true;
        continue;
      }
      if (cfg_.refresh && refresh_[rank].debt > 0) continue;
      int row = bc.para_rows.front();
      if (try_issue(Cmd::ACT, rank, bank, row, now, Source::MC_PARA)) {
        bc.para_rows.pop_front();
        bc.para_open = true;
        bc.para_row = row;
        return true;
      }
    }
  return false;
}

bool Controller::schedule_queue(std::deque<Request>& q, Cycle now) {
  std::size_t best_hit = q.size(), best_any = q.size();
  Cmd any_cmd = Cmd::ACT;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Request& r = q[i];
    int rank = r.addr.rank, bank = r.bank, row = r.addr.row;
    const auto& bs = dram_.bank(rank, bank);
    if (bs.partial) continue;
    const BankCtl& bc = ctl(rank, bank);
    Cmd cmd;
    bool hit = false;
    if (bs.open_row == row && !bc.para_open) {
      cmd = r.write ? Cmd::WR : Cmd::RD;
      hit = true;
      if (!column_allowed(rank, bank, r.write, now)) continue;
    } else if (bs.open_row >= 0) {
      if (bc.para_open || pending_hit(rank, bank, bs.open_row, &q)) continue;
      cmd = Cmd::PRE;
    } else {
      if (!act_allowed(rank, bank, row, now)) continue;
      cmd = Cmd::ACT;
    }
    if (dram_.earliest(cmd, rank, bank, cmd == Cmd::PRE ? bs.open_row : row, now) > now) continue;
    if (hit && bs.hits < cfg_.cap) {
      best_hit = i;
      break;
    }
    if (best_any == q.size()) {
      best_any = i;
      any_cmd = cmd;
    }
  }
  std::size_t pick = best_hit < q.size() ? best_hit : best_any;
  if (pick == q.size()) return false;
  Request r = q[pick];
  Cmd cmd = best_hit < q.size() ? (r.write ? Cmd::WR : Cmd::RD) : any_cmd;
  int rank = r.addr.rank, bank = r.bank;
  int row = cmd == Cmd::PRE ? dram_.bank(rank, bank).open_row : r.addr.row;
  issue(cmd, rank, bank, row, now, r.origin);
  if (cmd == Cmd::RD || cmd == Cmd::WR) {
    q.erase(q.begin() + static_cast<std::ptrdiff_t>(pick));
    complete(r, now + (cmd == Cmd::RD ? t_.read_latency() : t_.tCWL + t_.tBL));
  }
  return true;
}

bool Controller::timeout_step(Cycle now) {
  if (cfg_.row_timeout <= 0) return false;
  int nb = g_.banks();
  for (int rank = 0; rank < g_.ranks; ++rank)
    for (int bank = 0; bank < nb; ++bank) {
      const auto& bs = dram_.bank(rank, bank);
      if (bs.open_row < 0 || bs.partial) continue;
      const BankCtl& bc = ctl(rank, bank);
      if (bc.para_open) continue;
      if (now - bc.last_access < cfg_.row_timeout) continue;
      bool wanted = false;
      for (const auto& r : *serving())
        if (r.addr.rank == rank && r.bank == bank && r.addr.row == bs.open_row) wanted = true;
      if (wanted) continue;
      if (try_issue(Cmd::PRE, rank, bank, bs.open_row, now, Source::MC)) return true;
    }
  return false;
}

void Controller::scrub_feed(Cycle now) {
  if (cfg_.scrub_row_interval <= 0) return;
  int nb = g_.banks();
  for (int rank = 0; rank < g_.ranks; ++rank)
    for (int bank = 0; bank < nb; ++bank) {
      BankCtl& bc = ctl(rank, bank);
      while (now >= bc.scrub_next) {
        scrub_jobs_.push_back(ScrubJob{rank, bank, bc.scrub_row, 0});
        bc.scrub_row = (bc.scrub_row + 1) % g_.rows_per_bank;
        bc.scrub_next += cfg_.scrub_row_interval;
      }
    }
  while (!scrub_jobs_.empty() && static_cast<int>(readq_.size()) < cfg_.read_queue &&
         scrub_inflight_ < cfg_.scrub_slots) {
    ScrubJob& j = scrub_jobs_.front();
    Request r;
    r.id = scrub_ids_++;
    r.write = false;
    r.addr.channel = channel_;
    r.addr.rank = j.rank;
    r.addr.bankgroup = dram::bankgroup_of(g_, j.bank);
    r.addr.bank = j.bank % g_.banks_per_group;
    r.addr.row = j.row;
    r.addr.column = j.next_col;
    r.core = -1;
    r.origin = Source::MC_SCRUB;
    enqueue(r, now);
    ++scrub_inflight_;
    if (++j.next_col == g_.columns()) {
      scrub_jobs_.pop_front();
      ++stats_.scrub_rows;
    }
  }
}

void Controller::complete(Request r, Cycle at) {
  r.completion = at;
  if (r.core < 0) {
    --scrub_inflight_;
    return;
  }
  done_.push(Done{at, done_seq_++, r});
}

bool Controller::pop_completion(Cycle now, Request& out) {
  if (done_.empty() || done_.top().at > now) return false;
  out = done_.top().r;
  done_.pop();
  return true;
}

void Controller::tick(Cycle now) {
  if (!cfg_.smd && cfg_.refresh) {
    for (auto& rf : refresh_)
      while (now >= rf.next_tick) {
        ++rf.debt;
        rf.next_tick += t_.tREFI;
        stats_.max_debt = std::max<std::int64_t>(stats_.max_debt, rf.debt);
      }
  }
  scrub_feed(now);
  for (std::size_t i = 0; i < trains_.size();) {
    int idx = trains_[i];
    const Train& tr = banks_[idx].train;
    if (tr.await_until >= 0 && now >= tr.await_until) {
      end_train(idx, now);
      continue;
    }
    ++i;
  }
  if (retry_step(now)) return;
  if (urgent_step(now)) return;
  if (refresh_step(now)) return;
  if (para_step(now)) return;

  int wq = static_cast<int>(writeq_.size());
  if (drain_ && wq <= cfg_.drain_low) drain_ = false;
  if (!drain_ && (wq >= cfg_.drain_high || (readq_.empty() && wq > 0))) drain_ = true;
  if (readq_.empty() && wq == 0) drain_ = false;
  auto& primary = drain_ ? writeq_ : readq_;
  auto& secondary = drain_ ? readq_ : writeq_;
  if (schedule_queue(primary, now)) return;
  if (primary.empty() && schedule_queue(secondary, now)) return;
  timeout_step(now);
}

bool Controller::quiescent() const {
  if (!readq_.empty() || !writeq_.empty() || !done_.empty() || !trains_.empty()) return false;
  if (!scrub_jobs_.empty() || scrub_inflight_ > 0) return false;
  for (int rank = 0; rank < g_.ranks; ++rank) {
    if (!cfg_.smd && cfg_.refresh && refresh_[rank].debt > 0) return false;
    for (int bank = 0; bank < g_.banks(); ++bank) {
      if (dram_.bank(rank, bank).open_row >= 0) return false;
      const BankCtl& bc = ctl(rank, bank);
      if (!bc.para_rows.empty() || bc.para_open) return false;
    }
  }
  return true;
}

Cycle Controller::next_timed_event() const {
  Cycle w = kNever;
  if (!cfg_.smd && cfg_.refresh)
    for (const auto& rf : refresh_) w = std::min(w, rf.next_tick);
  if (cfg_.scrub_row_interval > 0)
    for (const auto& bc : banks_) w = std::min(w, bc.scrub_next);
  if (!done_.empty()) w = std::min(w, done_.top().at);
  return w;
}

}  // namespace smd::mc
