#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace pdc::fft {

using cplx = std::complex<double>;

void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free(void* p) noexcept;

// Allocator returning SIMD-aligned storage, so that one plan can run on any
// buffer of the same shape.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(aligned_alloc_bytes(n * sizeof(T))); }
  void deallocate(T* p, std::size_t) noexcept { aligned_free(p); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using CVec = std::vector<cplx, AlignedAllocator<cplx>>;
using RVec = std::vector<double, AlignedAllocator<double>>;

enum class Direction { forward, backward };

// estimate: plan from heuristics only, identical on every run.
// measure: time candidate algorithms once and persist the choice in a
// wisdom file, so later runs reuse the same algorithm bit for bit.
enum class Rigor { estimate, measure };

// Wisdom file location: $PDC_FFTW_WISDOM, else $HOME/.cache/pdc/fftw3.wisdom.
std::string wisdom_path();

// In-place multidimensional complex DFT over a row-major array of the given
// shape. Unnormalized: forward uses exp(-i...), backward exp(+i...).
class Plan {
 public:
  Plan(std::vector<int> shape, Direction dir, Rigor rigor = Rigor::estimate);
  ~Plan();
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& other) noexcept;
  Plan& operator=(Plan&& other) noexcept;

  void execute(cplx* data) const;
  void execute(CVec& data) const { execute(data.data()); }

  std::size_t size() const { return size_; }
  const std::vector<int>& shape() const { return shape_; }

 private:
  void* plan_ = nullptr;
  std::vector<int> shape_;
  std::size_t size_ = 0;
};

// Forward then backward with 1/sqrt(N) on each leg.
struct UnitaryFft {
  explicit UnitaryFft(std::vector<int> shape, Rigor rigor = Rigor::estimate);
  void forward(cplx* data) const;
  void backward(cplx* data) const;
  void forward(CVec& d) const { forward(d.data()); }
  void backward(CVec& d) const { backward(d.data()); }
  std::size_t size() const { return fwd.size(); }

  Plan fwd;
  Plan bwd;
  double scale;
};

// Signed DFT index of bin k in a length-n transform.
inline int signed_index(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

}  // namespace pdc::fft
