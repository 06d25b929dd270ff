#pragma once

// Replacement global operator new/delete that feeds ihnn::profile counters.
// Include in exactly one translation unit of an executable.

#include <cstddef>
#include <cstdlib>
#include <new>

#include "ihnn/profile/memory.hpp"

namespace ihnn::profile::detail {

// Each block is [padding | header offset | size | user bytes]; the header is one
// alignment unit (>= 16 bytes), so both words fit just below the user pointer.
inline void* counted_alloc(std::size_t n, std::size_t align) {
  if (align < alignof(std::max_align_t)) align = alignof(std::max_align_t);
  const std::size_t header = align;
  void* raw = nullptr;
  if (align == alignof(std::max_align_t)) {
    raw = std::malloc(n + header);
  } else {
    const std::size_t total = (n + header + align - 1) / align * align;
    raw = std::aligned_alloc(align, total);
  }
  if (raw == nullptr) return nullptr;
  auto* base = static_cast<unsigned char*>(raw);
  auto* words = reinterpret_cast<std::size_t*>(base + header) - 2;
  words[0] = header;
  words[1] = n;
  note_alloc(n);
  return base + header;
}

inline void counted_free(void* p) {
  if (p == nullptr) return;
  auto* user = static_cast<unsigned char*>(p);
  const auto* words = reinterpret_cast<const std::size_t*>(user) - 2;
  const std::size_t header = words[0];
  note_free(words[1]);
  std::free(user - header);
}

inline void* counted_alloc_or_throw(std::size_t n, std::size_t align) {
  if (void* p = counted_alloc(n == 0 ? 1 : n, align)) return p;
  throw std::bad_alloc();
}

}  // namespace ihnn::profile::detail

void* operator new(std::size_t n) { return ihnn::profile::detail::counted_alloc_or_throw(n, 0); }
void* operator new[](std::size_t n) { return ihnn::profile::detail::counted_alloc_or_throw(n, 0); }
void* operator new(std::size_t n, std::align_val_t a) {
  return ihnn::profile::detail::counted_alloc_or_throw(n, static_cast<std::size_t>(a));
}
void* operator new[](std::size_t n, std::align_val_t a) {
  return ihnn::profile::detail::counted_alloc_or_throw(n, static_cast<std::size_t>(a));
}
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  return ihnn::profile::detail::counted_alloc(n == 0 ? 1 : n, 0);
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  return ihnn::profile::detail::counted_alloc(n == 0 ? 1 : n, 0);
}
void operator delete(void* p) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete[](void* p) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete(void* p, std::size_t) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete[](void* p, std::size_t) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete(void* p, std::align_val_t) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { ihnn::profile::detail::counted_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { ihnn::profile::detail::counted_free(p); }
