#include "aquaopt/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace aquaopt::simd {

namespace {

bool cpu_has_avx2() {
#if defined(AQUAOPT_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("AQUAOPT_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return detected_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

Isa detected_isa() { return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void select_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

void control_sweep(const ControlSweepArgs& args) {
#if defined(AQUAOPT_WITH_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::control_sweep(args);
#endif
  scalar::control_sweep(args);
}

void gemm_nn(const GemmArgs& args) {
#if defined(AQUAOPT_WITH_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::gemm_nn(args);
#endif
  scalar::gemm_nn(args);
}

void gemm_nt(const GemmNtArgs& args) {
#if defined(AQUAOPT_WITH_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::gemm_nt(args);
#endif
  scalar::gemm_nt(args);
}

}  // namespace aquaopt::simd
