#include "flowent/file_entropy.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace flowent {

FileEntropy stream_entropy(std::istream& in, Estimator variant, std::size_t chunk_bytes) {
    if (chunk_bytes == 0) {
        throw std::invalid_argument("chunk size must be positive");
    }
    std::vector<std::uint8_t> buf(chunk_bytes);
    SymbolHistogram hist;
    while (in) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) {
            break;
        }
        hist.update(std::span<const std::uint8_t>(buf.data(), got));
    }
    if (in.bad()) {
        throw std::runtime_error("read error");
    }
    return FileEntropy{hist.total(), entropy(hist, variant), variant};
}

FileEntropy file_entropy(const std::filesystem::path& path, Estimator variant, std::size_t chunk_bytes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(path.string() + ": " + std::strerror(errno));
    }
    try {
        return stream_entropy(in, variant, chunk_bytes);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace flowent
