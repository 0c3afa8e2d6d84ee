#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <new>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace pf {

// 64-byte-aligned allocator. Keeping every float buffer in the same
// alignment class makes vectorized loops take identical code paths for
// identical shapes, so results do not depend on heap addresses and
// training runs are bitwise reproducible.
template <class T>
struct AlignedAlloc {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAlloc() = default;
  template <class U>
  AlignedAlloc(const AlignedAlloc<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(kAlign));
  }
  template <class U>
  bool operator==(const AlignedAlloc<U>&) const noexcept {
    return true;
  }
};

using FloatVec = std::vector<float, AlignedAlloc<float>>;

// Dense row-major float tensor. Rank 2 for vector data (N x D), rank 4 for
// feature maps (N x C x H x W), rank 1 {1} for scalars.
struct Tensor {
  std::vector<int> shape;
  FloatVec data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), 0.0f) {}
  Tensor(std::vector<int> s, FloatVec d) : shape(std::move(s)), data(std::move(d)) {
    assert(static_cast<int64_t>(data.size()) == count(shape));
  }

  static int64_t count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }
  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, float v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(float v) { return Tensor({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }
  float& at(int64_t i) { return data[static_cast<size_t>(i)]; }
  float at(int64_t i) const { return data[static_cast<size_t>(i)]; }

  bool all_finite() const {
    for (float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
  }
};

}  // namespace pf
