#include "riser/thread_pool.hpp"

#include <cstdint>
#include <cstdlib>
#include <string>

namespace riser {

ThreadPool::ThreadPool(int n_threads) {
  if (n_threads < 1) n_threads = 1;
  for (int i = 0; i < n_threads - 1; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::run_chunks(int n_chunks, const std::function<void(int)>& fn) {
  if (n_chunks <= 0) return;
  if (workers_.empty()) {
    for (int i = 0; i < n_chunks; ++i) fn(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    job_ = &fn;
    n_chunks_ = n_chunks;
    next_chunk_ = 0;
    in_flight_ = 0;
    ++generation_;
  }
  cv_work_.notify_all();
  // The calling thread participates as a worker.
  for (;;) {
    int chunk;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (next_chunk_ >= n_chunks_) break;
      chunk = next_chunk_++;
      ++in_flight_;
    }
    fn(chunk);
    {
      std::lock_guard<std::mutex> lk(mu_);
      --in_flight_;
    }
  }
  std::unique_lock<std::mutex> lk(mu_);
  cv_done_.wait(lk, [this] { return next_chunk_ >= n_chunks_ && in_flight_ == 0; });
  job_ = nullptr;
}

void ThreadPool::worker_loop() {
  std::uint64_t seen_generation = 0;
  for (;;) {
    const std::function<void(int)>* job;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_work_.wait(lk, [&] {
        return stop_ || (job_ != nullptr && generation_ != seen_generation);
      });
      if (stop_) return;
      seen_generation = generation_;
      job = job_;
    }
    for (;;) {
      int chunk;
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (job_ != job || next_chunk_ >= n_chunks_) break;
        chunk = next_chunk_++;
        ++in_flight_;
      }
      (*job)(chunk);
      bool all_done;
      {
        std::lock_guard<std::mutex> lk(mu_);
        --in_flight_;
        all_done = next_chunk_ >= n_chunks_ && in_flight_ == 0;
      }
      if (all_done) cv_done_.notify_all();
    }
  }
}

int ThreadPool::env_thread_count() {
  if (const char* env = std::getenv("RISER_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace riser
