#include "sketchpix/kernels.hpp"

namespace sketchpix::kernels {
namespace {

void gemm_scalar(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                 std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc,
                 bool accumulate) {
    if (!accumulate) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = 0.0;
    }
    if (!trans_a && !trans_b) {
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = c + i * ldc;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a[i * lda + p];
                const double* brow = b + p * ldb;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (!trans_a && trans_b) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* arow = a + i * lda;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = b + j * ldb;
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
                c[i * ldc + j] += s;
            }
        }
    } else if (trans_a && !trans_b) {
        for (std::size_t p = 0; p < k; ++p) {
            const double* arow = a + p * lda;
            const double* brow = b + p * ldb;
            for (std::size_t i = 0; i < m; ++i) {
                const double av = arow[i];
                double* crow = c + i * ldc;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p)
                    s += a[p * lda + i] * b[j * ldb + p];
                c[i * ldc + j] += s;
            }
        }
    }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul_scalar(std::size_t n, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void add_scalar(std::size_t n, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void fma_acc_scalar(std::size_t n, const double* a, const double* b,
                    double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

double dot_scalar(std::size_t n, const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::Scalar, gemm_scalar, axpy_scalar,
                                   mul_scalar,  add_scalar,  fma_acc_scalar,
                                   dot_scalar};
    return table;
}

}  // namespace sketchpix::kernels
