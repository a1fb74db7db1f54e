#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "provtrack/script.hpp"

namespace provtrack {

// Deterministic timer queue. Firings are ordered by due time, then by the
// sequence number assigned at registration.
class VirtualClock {
 public:
  struct Firing {
    Millis due;
    std::uint64_t seq;
    std::uint32_t handle;
  };

  Millis now() const noexcept { return now_; }
  std::size_t pending() const noexcept { return queue_.size(); }

  std::uint64_t schedule(Millis due, std::uint32_t handle) {
    const auto seq = next_seq_++;
    queue_.push({due, seq, handle});
    return seq;
  }

  // Re-enqueues under an existing sequence number (interval repeats keep
  // their registration order).
  void reschedule(Millis due, std::uint64_t seq, std::uint32_t handle) {
    queue_.push({due, seq, handle});
  }

  // Fires everything due at or before `to`, including firings scheduled by
  // callbacks along the way. `fire` observes now() == firing.due and returns
  // false to stop early, leaving that firing queued.
  template <typename F>
  void advance_to(Millis to, F&& fire) {
    if (to < now_) throw std::invalid_argument("clock cannot move backwards");
    while (!queue_.empty() && queue_.top().due <= to) {
      auto f = queue_.top();
      queue_.pop();
      now_ = f.due;
      if (!fire(f)) {
        queue_.push(f);
        break;
      }
    }
    now_ = to;
  }

 private:
  struct Later {
    bool operator()(const Firing& a, const Firing& b) const noexcept {
      if (a.due != b.due) return a.due > b.due;
      return a.seq > b.seq;
    }
  };

  Millis now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Firing, std::vector<Firing>, Later> queue_;
};

}  // namespace provtrack
