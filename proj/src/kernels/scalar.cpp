#include "flowent/kernels.hpp"

#include <cmath>

namespace flowent::kernels {
namespace {

void count_bytes_scalar(std::span<const std::uint8_t> bytes, std::uint64_t* counts) {
    for (std::uint8_t b : bytes) {
        ++counts[b];
    }
}

void add_counts_scalar(std::uint64_t* dst, const std::uint64_t* src) {
    for (std::size_t i = 0; i < kAlphabet; ++i) {
        dst[i] += src[i];
    }
}

double plugin_entropy_scalar(const std::uint64_t* counts, std::uint64_t total) {
    if (total == 0) {
        return 0.0;
    }
    const double n = static_cast<double>(total);
    double h = 0.0;
    for (std::size_t i = 0; i < kAlphabet; ++i) {
        if (counts[i] == 0) {
            continue;
        }
        const double p = static_cast<double>(counts[i]) / n;
        h -= p * std::log2(p);
    }
    return h;
}

double kt_entropy_scalar(const std::uint64_t* counts, std::uint64_t total) {
    const double n = static_cast<double>(total) + 0.5 * static_cast<double>(kAlphabet);
    double h = 0.0;
    for (std::size_t i = 0; i < kAlphabet; ++i) {
        const double q = (static_cast<double>(counts[i]) + 0.5) / n;
        h -= q * std::log2(q);
    }
    return h;
}

}  // namespace

const KernelTable& scalar() {
    static const KernelTable table{
        "scalar",
        count_bytes_scalar,
        add_counts_scalar,
        plugin_entropy_scalar,
        kt_entropy_scalar,
    };
    return table;
}

}  // namespace flowent::kernels
