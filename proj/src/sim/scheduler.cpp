#include "interop/sim/scheduler.hpp"

namespace interop::sim {

void Scheduler::spawn(Task<void> t) {
  roots_.push_back(std::move(t));
  roots_.back().start();
  reap();
}

void Scheduler::poll() {
  const std::size_t n = parked_.size();
  std::deque<Parked> later;
  for (std::size_t i = 0; i < n; ++i) {
    Parked p = std::move(parked_.front());
    parked_.pop_front();
    if ((p.pred && p.pred()) || now_ >= p.deadline) {
      p.h.resume();
    } else {
      later.push_back(std::move(p));
    }
  }
  // Anything parked while resuming now sits in parked_; keep the older ones first.
  for (auto& p : parked_) later.push_back(std::move(p));
  parked_ = std::move(later);
  reap();
}

void Scheduler::reap() {
  for (auto it = roots_.begin(); it != roots_.end();) {
    if (!it->done()) {
      ++it;
      continue;
    }
    try {
      it->result();
    } catch (...) {
      if (!error_) error_ = std::current_exception();
    }
    it = roots_.erase(it);
  }
}

void Scheduler::rethrow() {
  if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
}

}  // namespace interop::sim
