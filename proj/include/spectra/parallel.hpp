#pragma once
#include <cstdlib>
#include <thread>
#include <vector>

namespace spectra {

// Worker count from SPECTRA_THREADS; absent or invalid means 1 (the
// single-threaded deterministic default).
inline unsigned thread_budget() {
    const char* env = std::getenv("SPECTRA_THREADS");
    if (env == nullptr) return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v <= 1) return 1;
    return static_cast<unsigned>(v);
}

// Run fn(begin, end) over a fixed contiguous partition of [0, n). Each index
// belongs to exactly one chunk, so any work that writes disjoint outputs per
// index produces bit-identical results regardless of the thread count.
// `grain` is the minimum number of indices per chunk; work smaller than two
// grains runs serially to avoid paying thread spawn cost on tiny inputs.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t grain, Fn&& fn) {
    const unsigned workers = thread_budget();
    if (grain < 1) grain = 1;
    if (workers <= 1 || n < 2 * grain) {
        fn(std::size_t{0}, n);
        return;
    }
    const unsigned chunks = static_cast<unsigned>(
        std::min<std::size_t>(workers, n / grain));
    const std::size_t base = n / chunks;
    const std::size_t extra = n % chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks - 1);
    std::size_t begin = 0;
    for (unsigned c = 0; c < chunks; ++c) {
        const std::size_t len = base + (c < extra ? 1 : 0);
        const std::size_t end = begin + len;
        if (c + 1 == chunks) {
            fn(begin, end);
        } else {
            pool.emplace_back([&fn, begin, end] { fn(begin, end); });
        }
        begin = end;
    }
    for (auto& t : pool) t.join();
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_for(n, 1, std::forward<Fn>(fn));
}

} // namespace spectra
