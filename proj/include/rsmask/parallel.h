#pragma once

// Ordered fan-out: batches are produced on a worker pool and consumed on the
// calling thread strictly in batch order, so every reduction sees the same
// sequence whatever the worker count.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace rsmask {

/// Produce(b) -> T runs concurrently; Consume(b, T&&) -> bool runs in order
/// and returns false to stop early. Returns the number of batches consumed.
template <class T, class Produce, class Consume>
std::uint64_t run_ordered(std::uint64_t max_batches, int workers, Produce produce, Consume consume,
                          const std::atomic<bool>* stop = nullptr) {
    auto stopped = [&] { return stop && stop->load(); };
    if (workers <= 1) {
        std::uint64_t b = 0;
        for (; b < max_batches && !stopped(); ++b)
            if (!consume(b, produce(b)))
                return b + 1;
        return b;
    }

    std::mutex m;
    std::condition_variable cv;
    std::map<std::uint64_t, T> ready;
    std::uint64_t next_issue = 0, next_consume = 0;
    const std::uint64_t window = std::uint64_t(workers) * 4;
    bool done = false;
    std::exception_ptr error;

    auto work = [&] {
        for (;;) {
            std::uint64_t b;
            {
                std::unique_lock lk(m);
                cv.wait(lk, [&] { return done || next_issue < next_consume + window; });
                if (done || next_issue >= max_batches)
                    return;
                b = next_issue++;
            }
            try {
                T r = produce(b);
                std::lock_guard lk(m);
                ready.emplace(b, std::move(r));
            } catch (...) {
                std::lock_guard lk(m);
                if (!error)
                    error = std::current_exception();
                done = true;
            }
            cv.notify_all();
        }
    };

    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i)
        pool.emplace_back(work);

    std::uint64_t consumed = 0;
    while (consumed < max_batches && !stopped()) {
        T item;
        {
            std::unique_lock lk(m);
            cv.wait(lk, [&] { return error || ready.count(consumed); });
            if (error)
                break;
            auto it = ready.find(consumed);
            item = std::move(it->second);
            ready.erase(it);
        }
        bool more = consume(consumed, std::move(item));
        {
            std::lock_guard lk(m);
            next_consume = ++consumed;
        }
        cv.notify_all();
        if (!more)
            break;
    }
    {
        std::lock_guard lk(m);
        done = true;
    }
    cv.notify_all();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
    return consumed;
}

inline int default_workers() { return std::max(1, int(std::thread::hardware_concurrency())); }

}  // namespace rsmask
