#pragma once

// Classic libpcap capture files: reading and writing.

#include "flowent/net_types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace flowent::pcap {

inline constexpr std::uint32_t kMagicMicro = 0xA1B2C3D4;
inline constexpr std::uint32_t kMagicNano = 0xA1B23C4D;
inline constexpr std::uint32_t kMagicPcapng = 0x0A0D0D0A;
inline constexpr std::size_t kGlobalHeaderSize = 24;
inline constexpr std::size_t kRecordHeaderSize = 16;

enum class LinkType : std::uint32_t {
    ethernet = 1,
    raw = 101,
    linux_sll = 113,
};

enum class Resolution { micro, nano };

class CaptureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RawRecord {
    Timestamp ts;
    std::uint32_t orig_len = 0;
    std::span<const std::uint8_t> data;  // valid until the next Reader::next()
};

/// Sequential reader. Records come back in file order; a truncated trailing
/// record ends iteration and is counted in truncated_records().
class Reader {
public:
    // Throws CaptureError for unknown magic, pcapng, short header or
    // unsupported link type.
    static Reader open(const std::filesystem::path& path);
    explicit Reader(std::unique_ptr<std::istream> in);

    Reader(Reader&&) noexcept = default;
    Reader& operator=(Reader&&) noexcept = default;

    std::optional<RawRecord> next();

    LinkType link_type() const noexcept { return link_type_; }
    Resolution resolution() const noexcept { return resolution_; }
    bool byte_swapped() const noexcept { return swapped_; }
    std::uint32_t snaplen() const noexcept { return snaplen_; }
    std::uint64_t records_read() const noexcept { return records_; }
    std::uint64_t truncated_records() const noexcept { return truncated_; }

private:
    std::uint32_t field32(const std::uint8_t* p) const;

    std::unique_ptr<std::istream> in_;
    std::vector<std::uint8_t> buf_;
    LinkType link_type_ = LinkType::ethernet;
    Resolution resolution_ = Resolution::micro;
    bool swapped_ = false;
    bool done_ = false;
    std::uint32_t snaplen_ = 0;
    std::uint64_t records_ = 0;
    std::uint64_t truncated_ = 0;
};

/// Writes little-endian classic pcap.
class Writer {
public:
    Writer(const std::filesystem::path& path, LinkType link, Resolution res = Resolution::micro,
           std::uint32_t snaplen = 262144);
    explicit Writer(std::unique_ptr<std::ostream> out, LinkType link, Resolution res = Resolution::micro,
                    std::uint32_t snaplen = 262144);

    // orig_len of 0 means "same as captured".
    void write(Timestamp ts, std::span<const std::uint8_t> frame, std::uint32_t orig_len = 0);
    void flush();

private:
    void write_header(LinkType link, std::uint32_t snaplen);

    std::unique_ptr<std::ostream> out_;
    Resolution resolution_;
};

}  // namespace flowent::pcap
