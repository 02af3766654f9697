#include "smd/workload/core.hpp"

namespace smd::workload {

Core::Core(int id, const Trace* trace, CoreParams p) : id_(id), trace_(trace), p_(p) {
  if (p_.window < 1 || p_.width < 1 || p_.mshrs < 1) throw ConfigError("core: window, width and mshrs must be >= 1");
  if (!trace_ || trace_->empty()) {
    trace_done_ = true;
  } else {
    bubbles_left_ = (*trace_)[0].bubbles;
  }
  // Request ids carry the core in the top bits so completions can be routed.
  next_req_ = static_cast<std::uint64_t>(id) << 48;
}

void Core::tick(MemoryPort& port, Cycle now) {
  int retired = 0;
  while (retired < p_.width && !window_.empty()) {
    const Slot& s = window_.front();
    if (s.kind == Kind::Load && !s.done) break;
    if (s.kind == Kind::Bubble) ++stats_.bubbles;
    window_.pop_front();
    ++retired;
  }
  stats_.retired += retired;
  if (retired == 0) ++stats_.stall_cycles;

  stalled_on_issue_ = false;
  for (int n = 0; n < p_.width && static_cast<int>(window_.size()) < p_.window && !trace_done_; ++n) {
    if (bubbles_left_ > 0) {
      window_.push_back(Slot{Kind::Bubble, true, 0});
      --bubbles_left_;
      continue;
    }
    const TraceEntry& e = (*trace_)[cursor_];
    if (!e.write && outstanding_ >= p_.mshrs) {
      stalled_on_issue_ = true;
      break;
    }
    std::uint64_t req = next_req_;
    if (!port.issue(id_, e.write, e.addr, req, now)) {
      stalled_on_issue_ = true;
      break;
    }
    ++next_req_;
    if (e.write) {
      window_.push_back(Slot{Kind::Store, true, req});
      ++stats_.stores;
    } else {
      window_.push_back(Slot{Kind::Load, false, req});
      ++outstanding_;
      ++stats_.loads;
    }
    if (++cursor_ == trace_->size()) {
      if (p_.loop) {
        cursor_ = 0;
      } else {
        trace_done_ = true;
        break;
      }
    }
    bubbles_left_ = (*trace_)[cursor_].bubbles;
  }
}

void Core::on_complete(std::uint64_t id) {
  for (auto& s : window_)
    if (s.kind == Kind::Load && s.req == id && !s.done) {
      s.done = true;
      --outstanding_;
      return;
    }
  throw InvariantError("core " + std::to_string(id_) + ": completion for unknown request");
}

bool Core::finished() const { return trace_done_ && window_.empty(); }

bool Core::blocked() const {
  bool head_waits = window_.empty() || (window_.front().kind == Kind::Load && !window_.front().done);
  if (!head_waits) return false;
  if (trace_done_) return true;
  if (static_cast<int>(window_.size()) >= p_.window) return true;
  if (bubbles_left_ > 0) return false;
  const TraceEntry& e = (*trace_)[cursor_];
  return !e.write && outstanding_ >= p_.mshrs;
}

}  // namespace smd::workload
