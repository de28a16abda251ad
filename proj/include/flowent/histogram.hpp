#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace flowent {

class CounterOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

enum class Estimator { mle, kt };

std::string_view to_string(Estimator e);
// Throws std::invalid_argument for anything other than "mle" or "kt".
Estimator parse_estimator(std::string_view name);

/// Byte-frequency table over the 256-symbol alphabet.
///
/// Counters are 64-bit and only ever grow; any operation that would wrap a
/// counter (or the total) throws CounterOverflow and leaves the histogram
/// unchanged.
class SymbolHistogram {
public:
    using Counts = std::array<std::uint64_t, 256>;

    SymbolHistogram() = default;

    // Throws CounterOverflow if the counts do not sum within 64 bits.
    static SymbolHistogram from_counts(const Counts& counts);

    void update(std::span<const std::uint8_t> payload);
    void update(std::string_view payload);
    void merge(const SymbolHistogram& other);
    void reset() noexcept;

    std::uint64_t count(std::uint8_t symbol) const noexcept { return counts_[symbol]; }
    std::uint64_t total() const noexcept { return total_; }
    const Counts& counts() const noexcept { return counts_; }
    bool empty() const noexcept { return total_ == 0; }

    friend bool operator==(const SymbolHistogram&, const SymbolHistogram&) = default;

private:
    alignas(32) Counts counts_{};
    std::uint64_t total_ = 0;
};

SymbolHistogram merge(const SymbolHistogram& a, const SymbolHistogram& b);

// Plug-in (maximum likelihood) Shannon entropy in bits per byte, in [0, 8].
double shannon_entropy(const SymbolHistogram& hist);

// Add-1/2 (Krichevsky-Trofimov) smoothed entropy in bits per byte, in [0, 8].
// An empty histogram yields exactly 8.
double kt_entropy(const SymbolHistogram& hist);

double entropy(const SymbolHistogram& hist, Estimator estimator);

// Convenience: entropy of a single buffer.
double shannon_entropy(std::span<const std::uint8_t> bytes);

}  // namespace flowent
