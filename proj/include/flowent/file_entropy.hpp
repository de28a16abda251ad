#pragma once

#include "flowent/histogram.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace flowent {

inline constexpr std::size_t kDefaultChunkBytes = 64 * 1024;

struct FileEntropy {
    std::uint64_t bytes = 0;
    double entropy = 0.0;
    Estimator variant = Estimator::mle;
};

// Streams the input through a histogram in fixed-size chunks.
FileEntropy stream_entropy(std::istream& in, Estimator variant = Estimator::mle,
                           std::size_t chunk_bytes = kDefaultChunkBytes);

// Throws std::runtime_error mentioning the path on I/O failure.
FileEntropy file_entropy(const std::filesystem::path& path, Estimator variant = Estimator::mle,
                         std::size_t chunk_bytes = kDefaultChunkBytes);

}  // namespace flowent
