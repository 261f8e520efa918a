#include <atomic>
#include <cstdlib>
#include <cstring>

#include "sketchpix/kernels.hpp"

namespace sketchpix::kernels {
namespace {

const KernelTable* select_default() {
    if (const char* env = std::getenv("SKETCHPIX_SIMD");
        env != nullptr && std::strcmp(env, "scalar") == 0)
        return &scalar_table();
    if (cpu_has_avx2() && avx2_table() != nullptr) return avx2_table();
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{select_default()};
    return current;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
    const KernelTable* table = &scalar_table();
    if (isa == Isa::Avx2 && cpu_has_avx2() && avx2_table() != nullptr)
        table = avx2_table();
    slot().store(table, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace sketchpix::kernels
