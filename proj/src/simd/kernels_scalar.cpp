#include "aquaopt/simd/kernels.hpp"

namespace aquaopt::simd::scalar {

void control_sweep(const ControlSweepArgs& a) {
  for (std::size_t n = 0; n < a.n_nodes; ++n) {
    const double base = a.base[n];
    const double dwp = a.dw_up[n];
    const double dwm = a.dw_down[n];
    const double dh = a.dh[n];
    const double shape = a.shape[n];
    const double h = a.h[n];
    const double hpf = a.hpf[n];
    double best = 0.0;
    double arg = 0.0;
    for (std::size_t j = 0; j < a.n_controls; ++j) {
      const double bw = a.growth[j] * shape;
      // Matches the IEEE semantics of maxpd/minpd against +0.
      const double bw_pos = bw > 0.0 ? bw : 0.0;
      const double bw_neg = bw < 0.0 ? bw : 0.0;
      const double tw = bw_pos * dwp + bw_neg * dwm;
      const double th = (a.mortality[j] * h) * dh;
      const double cand = a.discount * (base + tw + th) - a.cost[j] * hpf;
      if (j == 0 || cand > best) {
        best = cand;
        arg = static_cast<double>(j);
      }
    }
    a.best[n] = best;
    a.arg[n] = static_cast<std::uint8_t>(arg);
  }
}

void gemm_nn(const GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    double* crow = g.c + i * g.ldc;
    for (std::size_t j = 0; j < g.n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < g.k; ++k) {
        acc = acc + g.a[i * g.a_row + k * g.a_col] * g.b[k * g.ldb + j];
      }
      if (g.bias != nullptr && j < g.bias_cols) acc = acc + g.bias[i];
      crow[j] = g.accumulate ? crow[j] + acc : acc;
    }
  }
}

void gemm_nt(const GemmNtArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t q = 0; q < g.p; ++q) {
      const double* arow = g.a + i * g.lda;
      const double* brow = g.b + q * g.ldb;
      double acc = 0.0;
      for (std::size_t j = 0; j < g.n; ++j) acc += arow[j] * brow[j];
      g.c[i * g.ldc + q] += acc;
    }
  }
}

}  // namespace aquaopt::simd::scalar
