#pragma once

// Inner-loop kernels for byte histograms and entropy sums.
//
// Every kernel has a scalar reference implementation. When the library is
// built for x86-64 an AVX2 variant is compiled into its own translation unit
// and chosen at runtime if the CPU supports it. The environment variable
// FLOWENT_KERNELS=scalar|avx2 overrides the automatic choice.
//
// Integer kernels (count, add) are bit-identical across variants. The
// floating-point entropy kernels agree to within a few ulp; callers that need
// bit-for-bit reproducibility across machines should pin the scalar table.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace flowent::kernels {

inline constexpr std::size_t kAlphabet = 256;

struct KernelTable {
    std::string_view name;

    // counts[b] += occurrences of b in bytes. No overflow checks.
    void (*count_bytes)(std::span<const std::uint8_t> bytes, std::uint64_t* counts);

    // dst[i] += src[i] for all 256 slots. No overflow checks.
    void (*add_counts)(std::uint64_t* dst, const std::uint64_t* src);

    // -sum p log2 p with p = counts[i] / total over nonzero counts; 0 when total == 0.
    double (*plugin_entropy)(const std::uint64_t* counts, std::uint64_t total);

    // -sum q log2 q over all 256 symbols, q = (counts[i] + 1/2) / (total + 128).
    double (*kt_entropy)(const std::uint64_t* counts, std::uint64_t total);
};

const KernelTable& scalar();

// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2();

// The table used by the rest of the library.
const KernelTable& active();

// Pin the active table by name ("scalar", "avx2", or "auto"). Returns false
// if the requested variant is unavailable; the active table is then unchanged.
bool select(std::string_view name);

}  // namespace flowent::kernels
