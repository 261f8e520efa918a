// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a CPUID check.
#include "sketchpix/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <vector>

namespace sketchpix::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// 4 x 8 register tile of C accumulated over k. `a_at(r, p)` abstracts the
// transpose of A.
template <bool TransA>
inline void tile_4x8(std::size_t i0, std::size_t j0, std::size_t k,
                     const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc,
                     bool accumulate) {
    __m256d acc[4][2];
    for (auto& row : acc) row[0] = row[1] = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * ldb + j0;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        for (int r = 0; r < 4; ++r) {
            const double av = TransA ? a[p * lda + i0 + r] : a[(i0 + r) * lda + p];
            const __m256d va = _mm256_set1_pd(av);
            acc[r][0] = _mm256_fmadd_pd(va, b0, acc[r][0]);
            acc[r][1] = _mm256_fmadd_pd(va, b1, acc[r][1]);
        }
    }
    for (int r = 0; r < 4; ++r) {
        double* crow = c + (i0 + r) * ldc + j0;
        if (accumulate) {
            acc[r][0] = _mm256_add_pd(acc[r][0], _mm256_loadu_pd(crow));
            acc[r][1] = _mm256_add_pd(acc[r][1], _mm256_loadu_pd(crow + 4));
        }
        _mm256_storeu_pd(crow, acc[r][0]);
        _mm256_storeu_pd(crow + 4, acc[r][1]);
    }
}

// Row-at-a-time fallback for the ragged edges of the tiling.
template <bool TransA>
inline void edge_rows(std::size_t i_begin, std::size_t i_end,
                      std::size_t j_begin, std::size_t j_end, std::size_t k,
                      const double* a, std::size_t lda, const double* b,
                      std::size_t ldb, double* c, std::size_t ldc,
                      bool accumulate) {
    for (std::size_t i = i_begin; i < i_end; ++i) {
        double* crow = c + i * ldc;
        if (!accumulate)
            for (std::size_t j = j_begin; j < j_end; ++j) crow[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = TransA ? a[p * lda + i] : a[i * lda + p];
            const __m256d va = _mm256_set1_pd(av);
            const double* brow = b + p * ldb;
            std::size_t j = j_begin;
            for (; j + 4 <= j_end; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), cv);
                _mm256_storeu_pd(crow + j, cv);
            }
            for (; j < j_end; ++j) crow[j] += av * brow[j];
        }
    }
}

template <bool TransA>
void gemm_xn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             std::size_t lda, const double* b, std::size_t ldb, double* c,
             std::size_t ldc, bool accumulate) {
    const std::size_t m4 = m - m % 4;
    const std::size_t n8 = n - n % 8;
    for (std::size_t i0 = 0; i0 < m4; i0 += 4)
        for (std::size_t j0 = 0; j0 < n8; j0 += 8)
            tile_4x8<TransA>(i0, j0, k, a, lda, b, ldb, c, ldc, accumulate);
    if (n8 < n)
        edge_rows<TransA>(0, m4, n8, n, k, a, lda, b, ldb, c, ldc, accumulate);
    if (m4 < m)
        edge_rows<TransA>(m4, m, 0, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

double dot_avx2(std::size_t n, const double* a, const double* b) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                             _mm256_loadu_pd(b + i + 4), s1);
    }
    for (; i + 4 <= n; i += 4)
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemm_avx2(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc,
               bool accumulate) {
    if (!trans_b) {
        if (trans_a)
            gemm_xn<true>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
        else
            gemm_xn<false>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
        return;
    }
    if (!trans_a) {
        if (m >= 4) {
            // Pack B^T once so the register-tiled kernel can stream it.
            thread_local std::vector<double> packed;
            packed.resize(k * n);
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t p = 0; p < k; ++p) packed[p * n + j] = b[j * ldb + p];
            gemm_xn<false>(m, n, k, a, lda, packed.data(), n, c, ldc, accumulate);
            return;
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double s = dot_avx2(k, a + i * lda, b + j * ldb);
                c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
            }
        }
        return;
    }
    // A^T B^T is never produced by the autodiff rules; keep it simple.
    scalar_table().gemm(true, true, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), yv));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void mul_avx2(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void add_avx2(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void fma_acc_avx2(std::size_t n, const double* a, const double* b, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a[i] * b[i];
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{Isa::Avx2, gemm_avx2, axpy_avx2, mul_avx2,
                                   add_avx2,  fma_acc_avx2, dot_avx2};
    return &table;
}

}  // namespace sketchpix::kernels

#else

namespace sketchpix::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace sketchpix::kernels

#endif
