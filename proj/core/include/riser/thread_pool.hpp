#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace riser {

/// Fork-join pool over a fixed chunk grid.
///
/// Work is always expressed as `n_chunks` independent jobs writing to
/// disjoint output slots; results are combined by the caller in chunk-index
/// order. Because the chunk grid never depends on the worker count, results
/// are bit-identical whether the pool has 1 thread or 64.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  /// Runs fn(0) .. fn(n_chunks-1), blocking until all complete.
  void run_chunks(int n_chunks, const std::function<void(int)>& fn);

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  /// Worker count from RISER_THREADS, falling back to hardware concurrency.
  static int env_thread_count();

 private:
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  const std::function<void(int)>* job_ = nullptr;
  int n_chunks_ = 0;
  int next_chunk_ = 0;
  int in_flight_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace riser
