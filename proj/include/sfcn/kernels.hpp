#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop arithmetic kernels. A scalar reference implementation always
// exists; on x86-64 an AVX2/FMA variant is selected at runtime when the CPU
// supports it. The environment variable SFCN_KERNELS=scalar|avx2 (or
// set_active) overrides the choice. All higher-level code goes through
// active() so the whole library switches backend at once.
namespace sfcn::kernels {

struct Table {
  const char* name;
  // y[i] += a * x[i]
  void (*axpy)(double* y, const double* x, double a, std::size_t n);
  // out[i] = a[i] + b[i]
  void (*add)(double* out, const double* a, const double* b, std::size_t n);
  // y[i] *= a
  void (*scale)(double* y, double a, std::size_t n);
  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] = max(0, x[i])
  void (*relu)(double* y, const double* x, std::size_t n);
  // gx[i] = x[i] > 0 ? gy[i] : 0
  void (*relu_mask)(double* gx, const double* x, const double* gy, std::size_t n);
};

const Table& scalar() noexcept;
bool have_avx2() noexcept;
const Table& avx2() noexcept;  // valid only if have_avx2()

const Table& active() noexcept;
bool set_active(std::string_view name) noexcept;

}  // namespace sfcn::kernels
