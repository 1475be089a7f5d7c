#pragma once

// Minimal persistent worker pool for intra-op parallelism. Work is split by
// output rows and each output element is computed entirely by one worker, so
// results are bit-identical for any thread count (the partition only decides
// who computes an element, never how it is accumulated).

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dfd {

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  void set_threads(int n) {
    std::lock_guard<std::mutex> outer(api_mutex_);
    if (n < 1) n = 1;
    if (n == threads_requested_) return;
    stop_workers();
    threads_requested_ = n;
    start_workers();
  }

  int threads() const { return threads_requested_; }

  // fn(begin, end) over [0, n) in contiguous chunks, one per worker.
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    std::lock_guard<std::mutex> outer(api_mutex_);
    int nw = threads_requested_;
    if (nw <= 1 || n < 2 * static_cast<std::size_t>(nw)) {
      fn(0, n);
      return;
    }
    std::size_t chunk = (n + nw - 1) / nw;
    {
      std::unique_lock<std::mutex> lk(mutex_);
      task_ = &fn;
      task_n_ = n;
      task_chunk_ = chunk;
      pending_ = 0;
      for (int w = 1; w < nw; ++w) {
        std::size_t b = static_cast<std::size_t>(w) * chunk;
        if (b < n) ++pending_;
      }
      ++generation_;
      cv_.notify_all();
    }
    fn(0, std::min(chunk, n));
    std::unique_lock<std::mutex> lk(mutex_);
    done_cv_.wait(lk, [&] { return pending_ == 0; });
    task_ = nullptr;
  }

  ~ThreadPool() { stop_workers(); }

 private:
  ThreadPool() = default;

  void start_workers() {
    stopping_ = false;
    for (int w = 1; w < threads_requested_; ++w) {
      workers_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  void stop_workers() {
    {
      std::unique_lock<std::mutex> lk(mutex_);
      stopping_ = true;
      ++generation_;
      cv_.notify_all();
    }
    for (auto& t : workers_) t.join();
    workers_.clear();
  }

  void worker_loop(int index) {
    uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t, std::size_t)>* task = nullptr;
      std::size_t b = 0, e = 0;
      {
        std::unique_lock<std::mutex> lk(mutex_);
        cv_.wait(lk, [&] { return generation_ != seen; });
        seen = generation_;
        if (stopping_) return;
        b = static_cast<std::size_t>(index) * task_chunk_;
        if (task_ == nullptr || b >= task_n_) continue;
        e = std::min(b + task_chunk_, task_n_);
        task = task_;
      }
      (*task)(b, e);
      {
        std::unique_lock<std::mutex> lk(mutex_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::mutex api_mutex_;
  std::mutex mutex_;
  std::condition_variable cv_, done_cv_;
  std::vector<std::thread> workers_;
  const std::function<void(std::size_t, std::size_t)>* task_ = nullptr;
  std::size_t task_n_ = 0, task_chunk_ = 0;
  int pending_ = 0;
  uint64_t generation_ = 0;
  bool stopping_ = false;
  int threads_requested_ = 1;
};

inline void set_num_threads(int n) { ThreadPool::instance().set_threads(n); }
inline int num_threads() { return ThreadPool::instance().threads(); }

inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  ThreadPool::instance().parallel_for(n, fn);
}

}  // namespace dfd
