#include "sfcn/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace sfcn::kernels {
namespace {

const Table* pick_default() noexcept {
  if (const char* env = std::getenv("SFCN_KERNELS")) {
    std::string_view want(env);
    if (want == "scalar") return &scalar();
    if (want == "avx2" && have_avx2()) return &avx2();
  }
  return have_avx2() ? &avx2() : &scalar();
}

const Table*& current() noexcept {
  static const Table* t = pick_default();
  return t;
}

}  // namespace

const Table& active() noexcept { return *current(); }

bool set_active(std::string_view name) noexcept {
  if (name == "scalar") {
    current() = &scalar();
    return true;
  }
  if (name == "avx2" && have_avx2()) {
    current() = &avx2();
    return true;
  }
  return false;
}

}  // namespace sfcn::kernels
