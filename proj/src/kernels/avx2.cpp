// AVX2 kernel variants. This file is compiled with -mavx2 and must only be
// entered after a runtime CPU check (see dispatch.cpp).

#include "flowent/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cstring>

namespace flowent::kernels {
namespace {

constexpr std::size_t kSmallInput = 256;
// Per-table uint32 counters must not wrap when the four tables are summed.
constexpr std::size_t kBlockBytes = std::size_t{1} << 28;
// Counts below 2^52 convert to double exactly with the magic-number trick.
constexpr std::uint64_t kExactDoubleLimit = std::uint64_t{1} << 52;

void count_block(const std::uint8_t* data, std::size_t len, std::uint64_t* counts) {
    alignas(32) std::array<std::array<std::uint32_t, kAlphabet>, 4> tables{};

    std::size_t i = 0;
    for (; i + 32 <= len; i += 32) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
        std::uint64_t lanes[4] = {
            static_cast<std::uint64_t>(_mm256_extract_epi64(v, 0)),
            static_cast<std::uint64_t>(_mm256_extract_epi64(v, 1)),
            static_cast<std::uint64_t>(_mm256_extract_epi64(v, 2)),
            static_cast<std::uint64_t>(_mm256_extract_epi64(v, 3)),
        };
        for (int shift = 0; shift < 64; shift += 8) {
            ++tables[0][(lanes[0] >> shift) & 0xFF];
            ++tables[1][(lanes[1] >> shift) & 0xFF];
            ++tables[2][(lanes[2] >> shift) & 0xFF];
            ++tables[3][(lanes[3] >> shift) & 0xFF];
        }
    }
    for (; i < len; ++i) {
        ++tables[0][data[i]];
    }

    for (std::size_t s = 0; s < kAlphabet; s += 4) {
        __m128i sum = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&tables[0][s]));
        sum = _mm_add_epi32(sum, _mm_loadu_si128(reinterpret_cast<const __m128i*>(&tables[1][s])));
        sum = _mm_add_epi32(sum, _mm_loadu_si128(reinterpret_cast<const __m128i*>(&tables[2][s])));
        sum = _mm_add_epi32(sum, _mm_loadu_si128(reinterpret_cast<const __m128i*>(&tables[3][s])));
        __m256i acc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(counts + s));
        acc = _mm256_add_epi64(acc, _mm256_cvtepu32_epi64(sum));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(counts + s), acc);
    }
}

void count_bytes_avx2(std::span<const std::uint8_t> bytes, std::uint64_t* counts) {
    if (bytes.size() < kSmallInput) {
        for (std::uint8_t b : bytes) {
            ++counts[b];
        }
        return;
    }
    const std::uint8_t* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        const std::size_t n = std::min(left, kBlockBytes);
        count_block(p, n, counts);
        p += n;
        left -= n;
    }
}

void add_counts_avx2(std::uint64_t* dst, const std::uint64_t* src) {
    for (std::size_t i = 0; i < kAlphabet; i += 4) {
        const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
        const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), _mm256_add_epi64(a, b));
    }
}

// Exact for values below 2^52.
inline __m256d u64_to_pd(__m256i v) {
    const __m256i magic_bits = _mm256_set1_epi64x(0x4330000000000000LL);
    const __m256d magic = _mm256_set1_pd(4503599627370496.0);  // 2^52
    return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic_bits)), magic);
}

// log2 for positive normal doubles. x = m * 2^e with m folded into
// [sqrt(1/2), sqrt(2)), then ln(m) = 2 atanh(s), s = (m-1)/(m+1), |s| < 0.172.
// Twelve odd terms of the atanh series leave truncation error below 1e-19.
inline __m256d log2_pd(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i one_exp = _mm256_set1_epi64x(0x3FF0000000000000LL);

    const __m256i biased_exp = _mm256_srli_epi64(bits, 52);
    __m256d e = _mm256_sub_pd(u64_to_pd(biased_exp), _mm256_set1_pd(1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_exp));

    const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730951);
    const __m256d big = _mm256_cmp_pd(m, sqrt2, _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
    e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d s2 = _mm256_mul_pd(s, s);

    static constexpr double kInvOdd[] = {
        1.0 / 23, 1.0 / 21, 1.0 / 19, 1.0 / 17, 1.0 / 15, 1.0 / 13,
        1.0 / 11, 1.0 / 9,  1.0 / 7,  1.0 / 5,  1.0 / 3,  1.0,
    };
    __m256d poly = _mm256_set1_pd(kInvOdd[0]);
    for (std::size_t k = 1; k < std::size(kInvOdd); ++k) {
        poly = _mm256_add_pd(_mm256_mul_pd(poly, s2), _mm256_set1_pd(kInvOdd[k]));
    }
    const __m256d two_log2e = _mm256_set1_pd(2.0 * 1.4426950408889634);
    const __m256d log2m = _mm256_mul_pd(_mm256_mul_pd(s, poly), two_log2e);
    return _mm256_add_pd(e, log2m);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double plugin_entropy_avx2(const std::uint64_t* counts, std::uint64_t total) {
    if (total == 0) {
        return 0.0;
    }
    if (total >= kExactDoubleLimit) {
        return scalar().plugin_entropy(counts, total);
    }
    const __m256d n = _mm256_set1_pd(static_cast<double>(total));
    const __m256i zero = _mm256_setzero_si256();
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < kAlphabet; i += 4) {
        const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(counts + i));
        const __m256d present = _mm256_castsi256_pd(
            _mm256_xor_si256(_mm256_cmpeq_epi64(c, zero), _mm256_set1_epi64x(-1)));
        if (_mm256_movemask_pd(present) == 0) {
            continue;
        }
        const __m256d p = _mm256_div_pd(u64_to_pd(c), n);
        // Zero lanes are replaced by 1.0 so the log stays finite; their term is masked below.
        const __m256d safe_p = _mm256_blendv_pd(_mm256_set1_pd(1.0), p, present);
        const __m256d term = _mm256_mul_pd(safe_p, log2_pd(safe_p));
        acc = _mm256_add_pd(acc, _mm256_and_pd(term, present));
    }
    const double h = -hsum(acc);
    return h < 0.0 ? 0.0 : h;
}

double kt_entropy_avx2(const std::uint64_t* counts, std::uint64_t total) {
    if (total >= kExactDoubleLimit) {
        return scalar().kt_entropy(counts, total);
    }
    const __m256d n = _mm256_set1_pd(static_cast<double>(total) + 0.5 * static_cast<double>(kAlphabet));
    const __m256d half = _mm256_set1_pd(0.5);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < kAlphabet; i += 4) {
        const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(counts + i));
        const __m256d q = _mm256_div_pd(_mm256_add_pd(u64_to_pd(c), half), n);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(q, log2_pd(q)));
    }
    const double h = -hsum(acc);
    return h < 0.0 ? 0.0 : h;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        "avx2",
        count_bytes_avx2,
        add_counts_avx2,
        plugin_entropy_avx2,
        kt_entropy_avx2,
    };
    return table;
}

}  // namespace flowent::kernels
