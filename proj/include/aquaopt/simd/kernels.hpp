#pragma once

// Data-parallel inner loops shared by the finite-difference solver and the
// network stack. Every kernel has a scalar reference implementation and,
// where the target supports it, an AVX2 variant. The active variant is
// chosen at runtime (CPU detection, overridable with AQUAOPT_SIMD=scalar).
//
// control_sweep and gemm_nn produce bit-identical results across variants:
// both evaluate the same operations in the same order per output element,
// and the project is built with -ffp-contract=off. gemm_nt reduces along the
// contiguous axis and therefore only agrees to rounding.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace aquaopt::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Best variant supported by both the build and the running CPU.
Isa detected_isa();

/// Currently selected variant; defaults to detected_isa() unless the
/// AQUAOPT_SIMD environment variable names another supported one.
Isa active_isa();

/// Throws std::invalid_argument if the variant is not available.
void select_isa(Isa isa);

bool isa_available(Isa isa);

/// Inputs of one explicit HJB time step's sup over the control grid.
///
/// Per node n and control j:
///   bw   = growth[j] * shape[n]
///   tw   = max(bw, 0) * dw_up[n] + min(bw, 0) * dw_down[n]
///   th   = (mortality[j] * h[n]) * dh[n]
///   cand = discount * (base[n] + tw + th) - cost[j] * hpf[n]
/// best[n] = max_j cand, arg[n] = smallest j attaining it.
struct ControlSweepArgs {
  std::size_t n_nodes = 0;
  const double* base = nullptr;     // V + dt * (price generator terms)
  const double* dw_up = nullptr;    // forward w difference quotient
  const double* dw_down = nullptr;  // backward w difference quotient
  const double* dh = nullptr;       // h difference quotient along the h drift
  const double* shape = nullptr;    // w-dependent growth shape factor
  const double* h = nullptr;
  const double* hpf = nullptr;      // h * pF
  std::size_t n_controls = 0;
  const double* growth = nullptr;     // dt * (gamma - gammaF (f-u_j)^2)
  const double* mortality = nullptr;  // dt * (-mu - muF (f-u_j)^2)
  const double* cost = nullptr;       // dt * u_j * c(t)
  double discount = 1.0;              // 1 - r dt
  double* best = nullptr;
  std::uint8_t* arg = nullptr;
};

/// C[m, n] = sum_k A(m, k) * B[k, n] (+ bias[m] for n < bias_cols)
/// with A(m, k) = A[m * a_row + k * a_col], B and C row-major with leading
/// dimensions ldb and ldc. When accumulate is set the product is added to C.
struct GemmArgs {
  std::size_t m = 0, n = 0, k = 0;
  const double* a = nullptr;
  std::size_t a_row = 0, a_col = 1;
  const double* b = nullptr;
  std::size_t ldb = 0;
  double* c = nullptr;
  std::size_t ldc = 0;
  const double* bias = nullptr;
  std::size_t bias_cols = 0;
  bool accumulate = false;
};

/// C[m, p] += sum_j A[m * lda + j] * B[p * ldb + j], j < n.
struct GemmNtArgs {
  std::size_t m = 0, p = 0, n = 0;
  const double* a = nullptr;
  std::size_t lda = 0;
  const double* b = nullptr;
  std::size_t ldb = 0;
  double* c = nullptr;
  std::size_t ldc = 0;
};

void control_sweep(const ControlSweepArgs& args);
void gemm_nn(const GemmArgs& args);
void gemm_nt(const GemmNtArgs& args);

namespace scalar {
void control_sweep(const ControlSweepArgs& args);
void gemm_nn(const GemmArgs& args);
void gemm_nt(const GemmNtArgs& args);
}  // namespace scalar

#if defined(AQUAOPT_WITH_AVX2)
namespace avx2 {
void control_sweep(const ControlSweepArgs& args);
void gemm_nn(const GemmArgs& args);
void gemm_nt(const GemmNtArgs& args);
}  // namespace avx2
#endif

}  // namespace aquaopt::simd
