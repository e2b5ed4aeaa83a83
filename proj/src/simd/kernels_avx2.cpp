#include "aquaopt/simd/kernels.hpp"

#include <immintrin.h>

namespace aquaopt::simd::avx2 {

void control_sweep(const ControlSweepArgs& a) {
  const std::size_t vec_end = a.n_nodes - a.n_nodes % 4;
  const __m256d zero = _mm256_setzero_pd();
  const __m256d discount = _mm256_set1_pd(a.discount);
  for (std::size_t n = 0; n < vec_end; n += 4) {
    const __m256d base = _mm256_loadu_pd(a.base + n);
    const __m256d dwp = _mm256_loadu_pd(a.dw_up + n);
    const __m256d dwm = _mm256_loadu_pd(a.dw_down + n);
    const __m256d dh = _mm256_loadu_pd(a.dh + n);
    const __m256d shape = _mm256_loadu_pd(a.shape + n);
    const __m256d h = _mm256_loadu_pd(a.h + n);
    const __m256d hpf = _mm256_loadu_pd(a.hpf + n);
    __m256d best = zero;
    __m256d arg = zero;
    for (std::size_t j = 0; j < a.n_controls; ++j) {
      const __m256d bw = _mm256_mul_pd(_mm256_set1_pd(a.growth[j]), shape);
      const __m256d tw = _mm256_add_pd(_mm256_mul_pd(_mm256_max_pd(bw, zero), dwp),
                                       _mm256_mul_pd(_mm256_min_pd(bw, zero), dwm));
      const __m256d th =
          _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(a.mortality[j]), h), dh);
      const __m256d cand =
          _mm256_sub_pd(_mm256_mul_pd(discount, _mm256_add_pd(_mm256_add_pd(base, tw), th)),
                        _mm256_mul_pd(_mm256_set1_pd(a.cost[j]), hpf));
      if (j == 0) {
        best = cand;
        continue;
      }
      const __m256d better = _mm256_cmp_pd(cand, best, _CMP_GT_OQ);
      best = _mm256_blendv_pd(best, cand, better);
      arg = _mm256_blendv_pd(arg, _mm256_set1_pd(static_cast<double>(j)), better);
    }
    _mm256_storeu_pd(a.best + n, best);
    alignas(32) double idx[4];
    _mm256_store_pd(idx, arg);
    for (int l = 0; l < 4; ++l) a.arg[n + l] = static_cast<std::uint8_t>(idx[l]);
  }
  if (vec_end < a.n_nodes) {
    ControlSweepArgs tail = a;
    tail.n_nodes = a.n_nodes - vec_end;
    tail.base += vec_end;
    tail.dw_up += vec_end;
    tail.dw_down += vec_end;
    tail.dh += vec_end;
    tail.shape += vec_end;
    tail.h += vec_end;
    tail.hpf += vec_end;
    tail.best += vec_end;
    tail.arg += vec_end;
    scalar::control_sweep(tail);
  }
}

namespace {

inline void finish_block(const GemmArgs& g, std::size_t i, std::size_t j, __m256d acc) {
  double* dst = g.c + i * g.ldc + j;
  if (g.bias != nullptr && j + 4 <= g.bias_cols) {
    acc = _mm256_add_pd(acc, _mm256_set1_pd(g.bias[i]));
  } else if (g.bias != nullptr && j < g.bias_cols) {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, acc);
    for (std::size_t l = 0; l < 4; ++l)
      if (j + l < g.bias_cols) tmp[l] = tmp[l] + g.bias[i];
    acc = _mm256_load_pd(tmp);
  }
  if (g.accumulate) acc = _mm256_add_pd(_mm256_loadu_pd(dst), acc);
  _mm256_storeu_pd(dst, acc);
}

}  // namespace

void gemm_nn(const GemmArgs& g) {
  const std::size_t n16 = g.n - g.n % 16;
  const std::size_t n4 = g.n - g.n % 4;
  for (std::size_t i = 0; i < g.m; ++i) {
    const double* arow = g.a + i * g.a_row;
    std::size_t j = 0;
    for (; j < n16; j += 16) {
      __m256d c0 = _mm256_setzero_pd();
      __m256d c1 = _mm256_setzero_pd();
      __m256d c2 = _mm256_setzero_pd();
      __m256d c3 = _mm256_setzero_pd();
      for (std::size_t k = 0; k < g.k; ++k) {
        const __m256d av = _mm256_set1_pd(arow[k * g.a_col]);
        const double* brow = g.b + k * g.ldb + j;
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(av, _mm256_loadu_pd(brow)));
        c1 = _mm256_add_pd(c1, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4)));
        c2 = _mm256_add_pd(c2, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 8)));
        c3 = _mm256_add_pd(c3, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 12)));
      }
      finish_block(g, i, j, c0);
      finish_block(g, i, j + 4, c1);
      finish_block(g, i, j + 8, c2);
      finish_block(g, i, j + 12, c3);
    }
    for (; j < n4; j += 4) {
      __m256d c0 = _mm256_setzero_pd();
      for (std::size_t k = 0; k < g.k; ++k) {
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(_mm256_set1_pd(arow[k * g.a_col]),
                                             _mm256_loadu_pd(g.b + k * g.ldb + j)));
      }
      finish_block(g, i, j, c0);
    }
    for (; j < g.n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < g.k; ++k) acc = acc + arow[k * g.a_col] * g.b[k * g.ldb + j];
      if (g.bias != nullptr && j < g.bias_cols) acc = acc + g.bias[i];
      double* dst = g.c + i * g.ldc + j;
      *dst = g.accumulate ? *dst + acc : acc;
    }
  }
}

void gemm_nt(const GemmNtArgs& g) {
  const std::size_t n8 = g.n - g.n % 8;
  for (std::size_t i = 0; i < g.m; ++i) {
    const double* arow = g.a + i * g.lda;
    for (std::size_t q = 0; q < g.p; ++q) {
      const double* brow = g.b + q * g.ldb;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      std::size_t j = 0;
      for (; j < n8; j += 8) {
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(arow + j), _mm256_loadu_pd(brow + j)));
        s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(arow + j + 4),
                                             _mm256_loadu_pd(brow + j + 4)));
      }
      alignas(32) double lanes[4];
      _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
      double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
      for (; j < g.n; ++j) acc += arow[j] * brow[j];
      g.c[i * g.ldc + q] += acc;
    }
  }
}

}  // namespace aquaopt::simd::avx2
