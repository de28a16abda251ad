#include "flowent/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace flowent::kernels {

#if defined(FLOWENT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(FLOWENT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* best_available() {
    if (const KernelTable* t = avx2()) {
        return t;
    }
    return &scalar();
}

const KernelTable* initial_choice() {
    if (const char* env = std::getenv("FLOWENT_KERNELS")) {
        const std::string_view want{env};
        if (want == "scalar") {
            return &scalar();
        }
        if (want == "avx2" && avx2() != nullptr) {
            return avx2();
        }
    }
    return best_available();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_choice()};
    return table;
}

}  // namespace

const KernelTable* avx2() {
#if defined(FLOWENT_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    return *current().load(std::memory_order_acquire);
}

bool select(std::string_view name) {
    const KernelTable* chosen = nullptr;
    if (name == "scalar") {
        chosen = &scalar();
    } else if (name == "avx2") {
        chosen = avx2();
    } else if (name == "auto") {
        chosen = best_available();
    }
    if (chosen == nullptr) {
        return false;
    }
    current().store(chosen, std::memory_order_release);
    return true;
}

}  // namespace flowent::kernels
