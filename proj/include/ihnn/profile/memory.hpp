#pragma once

#include <atomic>
#include <cstddef>

namespace ihnn::profile {

// Live/peak byte counters fed by the replacement allocator in counting_new.hpp.
// Without that allocator linked in, the counters never move and
// MemoryProbe::available() reports false.
namespace detail {
inline std::atomic<std::size_t> live_bytes{0};
inline std::atomic<std::size_t> peak_bytes{0};

inline void note_alloc(std::size_t n) {
  const std::size_t now = live_bytes.fetch_add(n, std::memory_order_relaxed) + n;
  std::size_t peak = peak_bytes.load(std::memory_order_relaxed);
  while (now > peak && !peak_bytes.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

inline void note_free(std::size_t n) { live_bytes.fetch_sub(n, std::memory_order_relaxed); }
}  // namespace detail

/// High-water mark of heap bytes allocated through operator new since reset().
class MemoryProbe {
 public:
  /// True when the counting allocator is installed in this executable.
  static bool available() {
    const std::size_t before = detail::live_bytes.load();
    auto* p = new char[64];
    const bool moved = detail::live_bytes.load() != before;
    delete[] p;
    return moved;
  }

  void reset() {
    baseline_ = detail::live_bytes.load();
    detail::peak_bytes.store(baseline_);
  }

  /// Peak live bytes above the level at reset().
  std::size_t peak_additional() const {
    const std::size_t peak = detail::peak_bytes.load();
    return peak > baseline_ ? peak - baseline_ : 0;
  }

  static std::size_t live() { return detail::live_bytes.load(); }

 private:
  std::size_t baseline_ = 0;
};

}  // namespace ihnn::profile
