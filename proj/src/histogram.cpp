#include "flowent/histogram.hpp"

#include "flowent/kernels.hpp"

#include <algorithm>
#include <limits>

namespace flowent {
namespace {

constexpr double kMaxBits = 8.0;

// Also folds the -0.0 a single-symbol input produces into +0.0.
double clamp_bits(double h) {
    return h <= 0.0 ? 0.0 : std::min(h, kMaxBits);
}

bool add_overflows(std::uint64_t a, std::uint64_t b) {
    return a > std::numeric_limits<std::uint64_t>::max() - b;
}

}  // namespace

std::string_view to_string(Estimator e) {
    return e == Estimator::kt ? "kt" : "mle";
}

Estimator parse_estimator(std::string_view name) {
    if (name == "mle") {
        return Estimator::mle;
    }
    if (name == "kt") {
        return Estimator::kt;
    }
    throw std::invalid_argument("unknown estimator '" + std::string(name) + "' (expected mle or kt)");
}

SymbolHistogram SymbolHistogram::from_counts(const Counts& counts) {
    SymbolHistogram h;
    for (std::uint64_t c : counts) {
        if (add_overflows(h.total_, c)) {
            throw CounterOverflow("symbol histogram total exceeds 64 bits");
        }
        h.total_ += c;
    }
    h.counts_ = counts;
    return h;
}

// Each counter is bounded by the total, so checking the total is sufficient.
void SymbolHistogram::update(std::span<const std::uint8_t> payload) {
    if (payload.empty()) {
        return;
    }
    if (add_overflows(total_, payload.size())) {
        throw CounterOverflow("symbol histogram update would overflow 64-bit counters");
    }
    kernels::active().count_bytes(payload, counts_.data());
    total_ += payload.size();
}

void SymbolHistogram::update(std::string_view payload) {
    update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

void SymbolHistogram::merge(const SymbolHistogram& other) {
    if (add_overflows(total_, other.total_)) {
        throw CounterOverflow("symbol histogram merge would overflow 64-bit counters");
    }
    kernels::active().add_counts(counts_.data(), other.counts_.data());
    total_ += other.total_;
}

void SymbolHistogram::reset() noexcept {
    counts_.fill(0);
    total_ = 0;
}

SymbolHistogram merge(const SymbolHistogram& a, const SymbolHistogram& b) {
    SymbolHistogram out = a;
    out.merge(b);
    return out;
}

double shannon_entropy(const SymbolHistogram& hist) {
    return clamp_bits(kernels::active().plugin_entropy(hist.counts().data(), hist.total()));
}

double kt_entropy(const SymbolHistogram& hist) {
    return clamp_bits(kernels::active().kt_entropy(hist.counts().data(), hist.total()));
}

double entropy(const SymbolHistogram& hist, Estimator estimator) {
    return estimator == Estimator::kt ? kt_entropy(hist) : shannon_entropy(hist);
}

double shannon_entropy(std::span<const std::uint8_t> bytes) {
    SymbolHistogram h;
    h.update(bytes);
    return shannon_entropy(h);
}

}  // namespace flowent
