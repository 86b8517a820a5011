#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>

#include "interop/sim/task.hpp"

namespace interop::sim {

/// Parks coroutines on (predicate, deadline) pairs and resumes them in
/// parking order once the predicate holds or the deadline tick is reached.
class Scheduler {
 public:
  std::uint64_t now() const { return now_; }
  void set_now(std::uint64_t t) { now_ = t; }

  struct WaitUntil {
    Scheduler& s;
    std::function<bool()> pred;
    std::uint64_t deadline;

    bool await_ready() { return (pred && pred()) || s.now_ >= deadline; }
    void await_suspend(std::coroutine_handle<> h) { s.parked_.push_back({h, pred, deadline}); }
    /// True if the predicate held; false on deadline.
    bool await_resume() { return pred && pred(); }
  };

  WaitUntil wait_until(std::function<bool()> pred, std::uint64_t deadline) {
    return {*this, std::move(pred), deadline};
  }
  WaitUntil sleep(std::uint64_t ticks) { return {*this, nullptr, now_ + ticks}; }

  /// Starts a root task; it runs until its first suspension.
  void spawn(Task<void> t);
  /// Resumes every parked coroutine that is ready. Coroutines parked during
  /// this call are considered on the next one.
  void poll();

  bool idle() const { return parked_.empty(); }
  std::size_t parked() const { return parked_.size(); }
  /// Rethrows the first exception that escaped a root task.
  void rethrow();

 private:
  struct Parked {
    std::coroutine_handle<> h;
    std::function<bool()> pred;
    std::uint64_t deadline;
  };
  void reap();

  std::uint64_t now_ = 0;
  std::deque<Parked> parked_;
  std::list<Task<void>> roots_;
  std::exception_ptr error_;
};

}  // namespace interop::sim
