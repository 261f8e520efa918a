#pragma once
// Dense double-precision inner loops used by the tensor library.
//
// Every kernel has a portable scalar reference implementation and, where the
// build supports it, an AVX2+FMA variant. The variant is picked once at first
// use from CPUID; set SKETCHPIX_SIMD=scalar in the environment to force the
// reference path.

#include <cstddef>
#include <string_view>

namespace sketchpix::kernels {

enum class Isa { Scalar, Avx2 };

// C[m x n] (+)= op(A) * op(B), all row-major with explicit leading dimensions.
// op(A) is m x k, op(B) is k x n.
using GemmFn = void (*)(bool trans_a, bool trans_b, std::size_t m,
                        std::size_t n, std::size_t k, const double* a,
                        std::size_t lda, const double* b, std::size_t ldb,
                        double* c, std::size_t ldc, bool accumulate);
// y[i] += alpha * x[i]
using AxpyFn = void (*)(std::size_t n, double alpha, const double* x,
                        double* y);
// out[i] = a[i] * b[i]
using MulFn = void (*)(std::size_t n, const double* a, const double* b,
                       double* out);
// out[i] = a[i] + b[i]
using AddFn = void (*)(std::size_t n, const double* a, const double* b,
                       double* out);
// y[i] += a[i] * b[i]
using FmaAccFn = void (*)(std::size_t n, const double* a, const double* b,
                          double* y);
using DotFn = double (*)(std::size_t n, const double* a, const double* b);

struct KernelTable {
    Isa isa;
    GemmFn gemm;
    AxpyFn axpy;
    MulFn mul;
    AddFn add;
    FmaAccFn fma_acc;
    DotFn dot;
};

const KernelTable& scalar_table();
// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();

// True when the running CPU reports AVX2 and FMA.
bool cpu_has_avx2();

// Table selected for this process (runtime dispatch, cached).
const KernelTable& active();

// Override the active table; used by equivalence tests and benchmarks.
void set_active(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace sketchpix::kernels
