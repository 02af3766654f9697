#pragma once

#include <deque>
#include <queue>
#include <random>
#include <vector>

#include "smd/chip/smd_chip.hpp"
#include "smd/dram/channel.hpp"
#include "smd/dram/command.hpp"

namespace smd::mc {

struct Request {
  std::uint64_t id = 0;
  bool write = false;
  dram::DramAddress addr;
  int bank = 0;  // flat bank within the rank
  int region = 0;
  Cycle arrival = 0;
  int core = -1;  // -1: controller-internal (scrub)
  Cycle completion = -1;
  dram::Source origin = dram::Source::MC;
};

enum class DivergencePolicy { Wait, Precharge, Hybrid };

struct ControllerConfig {
  int read_queue = 64;
  int write_queue = 64;
  int cap = 4;
  int drain_high = 32;
  int drain_low = 16;
  Cycle row_timeout = 100;  // 0 disables the idle-row timeout
  bool enforce_max_open = true;
  bool smd = false;
  bool refresh = true;  // baseline REF engine (ignored in SMD mode)
  int max_debt = 8;
  DivergencePolicy policy = DivergencePolicy::Wait;
  int hybrid_n = 1;
  Cycle retry_margin = 8;
  // MC-PARA baseline
  double para_p = 0.0;
  int para_blast = 1;
  std::uint64_t seed = 1;
  // MC-scrub baseline: per-bank row interval, 0 disables
  Cycle scrub_row_interval = 0;
  int scrub_slots = 16;
};

struct ControllerStats {
  std::int64_t acts = 0;  // every ACT put on the bus, retries included
  std::int64_t nacks = 0;
  std::int64_t partial_nacks = 0;
  std::int64_t retries = 0;
  std::int64_t retry_slips = 0;
  std::int64_t reads = 0;
  std::int64_t writes = 0;
  std::int64_t pres = 0;
  std::int64_t forced_pres = 0;
  std::int64_t refs = 0;
  std::int64_t para_acts = 0;
  std::int64_t scrub_rows = 0;
  std::int64_t max_debt = 0;
  std::int64_t max_train = 0;  // longest NACK-retry train in cycles
};

class Controller {
 public:
  // ranks: SMD rank models (empty in DDR4-baseline mode)
  Controller(int channel, const dram::Geometry& g, const dram::TimingParams& t, ControllerConfig cfg,
             std::vector<chip::SmdRank*> ranks, dram::EventSink* sink);

  bool can_accept(bool write) const;
  bool enqueue(Request r, Cycle now);
  void on_nack(const chip::NackNotice& n, Cycle now);
  void tick(Cycle now);
  bool pop_completion(Cycle now, Request& out);

  // True when nothing is queued or in flight and no bank needs attention.
  bool quiescent() const;
  // Next cycle at which an idle controller has work (refresh/scrub ticks).
  Cycle next_timed_event() const;

  const ControllerStats& stats() const { return stats_; }
  const dram::ChannelTiming& timing_model() const { return dram_; }
  int debt(int rank) const { return refresh_[rank].debt; }
  std::size_t queued() const { return readq_.size() + writeq_.size(); }

 private:
  struct Train {
    bool active = false;
    int row = -1;
    int region = -1;
    Cycle start = 0;
    Cycle last_act = 0;
    Cycle next_retry = 0;
    Cycle await_until = -1;  // retry issued; accepted if no NACK by then
    bool wait_partial = false;  // Wait policy: re-ACT while partially open
  };
  struct BankCtl {
    Train train;
    std::uint64_t known_locked = 0;
    bool close_partial = false;  // partial row that must be precharged
    Cycle last_access = 0;
    std::deque<int> para_rows;
    bool para_open = false;
    int para_row = -1;
    // MC-scrub walker
    Cycle scrub_next = 0;
    int scrub_row = 0;
  };
  struct RankRefresh {
    Cycle next_tick = 0;
    int debt = 0;
    std::int64_t count = 0;
  };
  struct ScrubJob {
    int rank = 0;
    int bank = 0;
    int row = 0;
    int next_col = 0;
  };
  struct Candidate {
    dram::Cmd cmd;
    std::size_t idx;
    bool write;
  };

  BankCtl& ctl(int rank, int bank) { return banks_[rank * g_.banks() + bank]; }
  const BankCtl& ctl(int rank, int bank) const { return banks_[rank * g_.banks() + bank]; }
  void issue(dram::Cmd cmd, int rank, int bank, int row, Cycle now, dram::Source src);
  bool try_issue(dram::Cmd cmd, int rank, int bank, int row, Cycle now, dram::Source src);
  bool act_allowed(int rank, int bank, int row, Cycle now) const;
  bool column_allowed(int rank, int bank, bool write, Cycle now) const;
  Cycle close_deadline(int rank, int bank) const;
  // A queued request (in `only`, or in either queue) would hit row and the cap allows it.
  bool pending_hit(int rank, int bank, int row, const std::deque<Request>* only = nullptr) const;
  // Queue the scheduler is currently serving.
  const std::deque<Request>* serving() const { return drain_ || readq_.empty() ? &writeq_ : &readq_; }
  std::size_t other_region_requests(int rank, int bank, int region) const;
  void end_train(int idx, Cycle now);
  bool retry_step(Cycle now);
  bool urgent_step(Cycle now);
  bool refresh_step(Cycle now);
  bool para_step(Cycle now);
  bool schedule_queue(std::deque<Request>& q, Cycle now);
  bool timeout_step(Cycle now);
  void scrub_feed(Cycle now);
  void complete(Request r, Cycle at);

  int channel_;
  dram::Geometry g_;
  dram::TimingParams t_;
  ControllerConfig cfg_;
  std::vector<chip::SmdRank*> ranks_;
  dram::EventSink* sink_;
  dram::ChannelTiming dram_;
  std::deque<Request> readq_, writeq_;
  std::vector<BankCtl> banks_;
  std::vector<int> trains_;  // indices into banks_ with an active train
  std::vector<RankRefresh> refresh_;
  bool drain_ = false;
  int scrub_inflight_ = 0;
  std::deque<ScrubJob> scrub_jobs_;
  std::uint64_t scrub_ids_ = 1ULL << 62;
  std::mt19937_64 rng_;
  std::bernoulli_distribution para_coin_;
  struct Done {
    Cycle at;
    std::uint64_t seq;
    Request r;
    bool operator>(const Done& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  std::priority_queue<Done, std::vector<Done>, std::greater<Done>> done_;
  std::uint64_t done_seq_ = 0;
  ControllerStats stats_;
  Cycle last_cmd_ = -1;
};

}  // namespace smd::mc
