#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace prom {

// Runs `work` over an input stream on `threads` workers and hands results to
// `emit` in input order. With one thread everything runs inline, so outputs
// are byte-identical across thread counts by construction.
//
// next: returns the next input or nullopt at end of stream (called serially).
// work: pure function of one input.
// emit: called in sequence order, serially.
template <typename In, typename Out>
void parallel_map_ordered(std::size_t threads,
                          const std::function<std::optional<In>()>& next,
                          const std::function<Out(In&&)>& work,
                          const std::function<void(Out&&)>& emit) {
  if (threads <= 1) {
    while (auto in = next()) emit(work(std::move(*in)));
    return;
  }

  struct State {
    std::mutex mu;
    std::condition_variable room;   // signals space for more inputs
    std::condition_variable ready;  // signals queued inputs or results
    std::deque<std::pair<std::size_t, In>> inputs;
    std::map<std::size_t, Out> results;
    std::size_t next_seq = 0;
    std::size_t emit_seq = 0;
    bool done_reading = false;
    std::size_t active_workers = 0;
    std::exception_ptr error;
  } st;

  const std::size_t window = threads * 4;

  auto worker = [&]() {
    while (true) {
      std::pair<std::size_t, In> job;
      {
        std::unique_lock lock(st.mu);
        st.ready.wait(lock, [&] {
          return !st.inputs.empty() || st.done_reading || st.error;
        });
        if (st.error || (st.inputs.empty() && st.done_reading)) return;
        job = std::move(st.inputs.front());
        st.inputs.pop_front();
        st.active_workers += 1;
      }
      try {
        Out out = work(std::move(job.second));
        std::unique_lock lock(st.mu);
        st.results.emplace(job.first, std::move(out));
        st.active_workers -= 1;
        st.room.notify_all();
      } catch (...) {
        std::unique_lock lock(st.mu);
        if (!st.error) st.error = std::current_exception();
        st.active_workers -= 1;
        st.room.notify_all();
        st.ready.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);

  auto drain_ready = [&](std::unique_lock<std::mutex>& lock) {
    while (true) {
      auto it = st.results.find(st.emit_seq);
      if (it == st.results.end()) break;
      Out out = std::move(it->second);
      st.results.erase(it);
      st.emit_seq += 1;
      lock.unlock();
      emit(std::move(out));
      lock.lock();
    }
  };

  {
    std::unique_lock lock(st.mu);
    while (!st.error) {
      lock.unlock();
      std::optional<In> in = next();
      lock.lock();
      if (!in) break;
      // Waking on a drainable result matters: workers moving a job from
      // active to results leave the outstanding count unchanged, so space
      // only appears after the producer drains.
      st.room.wait(lock, [&] {
        return st.error || st.results.count(st.emit_seq) != 0 ||
               st.next_seq - st.emit_seq < window;
      });
      drain_ready(lock);
      if (st.error) break;
      st.inputs.emplace_back(st.next_seq++, std::move(*in));
      st.ready.notify_one();
      drain_ready(lock);
    }
    st.done_reading = true;
    st.ready.notify_all();
    while (!st.error && st.emit_seq < st.next_seq) {
      st.room.wait(lock, [&] {
        return st.error || st.results.count(st.emit_seq) != 0;
      });
      drain_ready(lock);
    }
  }

  for (std::thread& t : pool) t.join();
  if (st.error) std::rethrow_exception(st.error);
}

}  // namespace prom
