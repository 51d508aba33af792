#include "pdc/fft.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numeric>
#include <utility>

#include <fftw3.h>

#include "pdc/errors.hpp"

namespace pdc::fft {

namespace {
// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool wisdom_loaded = false;

void load_wisdom_locked() {
  if (wisdom_loaded) return;
  wisdom_loaded = true;
  fftw_import_wisdom_from_filename(wisdom_path().c_str());
}

void save_wisdom_locked() {
  const std::filesystem::path target = wisdom_path();
  std::error_code ec;
  std::filesystem::create_directories(target.parent_path(), ec);
  const auto tmp = target.string() + ".tmp";
  if (fftw_export_wisdom_to_filename(tmp.c_str())) {
    std::filesystem::rename(tmp, target, ec);
  }
}
}  // namespace

std::string wisdom_path() {
  if (const char* env = std::getenv("PDC_FFTW_WISDOM"); env && *env) return env;
  const char* home = std::getenv("HOME");
  return std::string(home && *home ? home : ".") + "/.cache/pdc/fftw3.wisdom";
}

void* aligned_alloc_bytes(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (!p) throw std::bad_alloc();
  return p;
}

void aligned_free(void* p) noexcept { fftw_free(p); }

Plan::Plan(std::vector<int> shape, Direction dir, Rigor rigor) : shape_(std::move(shape)) {
  if (shape_.empty()) throw NumericError("FFT plan needs at least one dimension");
  size_ = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                          [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  CVec scratch(size_);
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const int rank = static_cast<int>(shape_.size());
  if (rigor == Rigor::measure) {
    load_wisdom_locked();
    plan_ = fftw_plan_dft(rank, shape_.data(), buf, buf, sign, FFTW_MEASURE | FFTW_WISDOM_ONLY);
    if (!plan_) {
      plan_ = fftw_plan_dft(rank, shape_.data(), buf, buf, sign, FFTW_MEASURE);
      if (plan_) save_wisdom_locked();
    }
  } else {
    plan_ = fftw_plan_dft(rank, shape_.data(), buf, buf, sign, FFTW_ESTIMATE);
  }
  if (!plan_) throw NumericError("FFTW failed to create a plan");
}

Plan::~Plan() {
  if (plan_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

Plan::Plan(Plan&& other) noexcept
    : plan_(std::exchange(other.plan_, nullptr)),
      shape_(std::move(other.shape_)),
      size_(other.size_) {}

Plan& Plan::operator=(Plan&& other) noexcept {
  if (this != &other) {
    this->~Plan();
    plan_ = std::exchange(other.plan_, nullptr);
    shape_ = std::move(other.shape_);
    size_ = other.size_;
  }
  return *this;
}

void Plan::execute(cplx* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_), buf, buf);
}

UnitaryFft::UnitaryFft(std::vector<int> shape, Rigor rigor)
    : fwd(shape, Direction::forward, rigor),
      bwd(shape, Direction::backward, rigor),
      scale(1.0 / std::sqrt(static_cast<double>(fwd.size()))) {}

void UnitaryFft::forward(cplx* data) const {
  fwd.execute(data);
  for (std::size_t i = 0; i < fwd.size(); ++i) data[i] *= scale;
}

void UnitaryFft::backward(cplx* data) const {
  bwd.execute(data);
  for (std::size_t i = 0; i < bwd.size(); ++i) data[i] *= scale;
}

}  // namespace pdc::fft
