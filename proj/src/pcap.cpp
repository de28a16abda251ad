#include "flowent/pcap.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace flowent::pcap {
namespace {

// Largest record we are willing to buffer; anything bigger is treated as corruption.
constexpr std::uint32_t kMaxRecordBytes = 64u << 20;

std::uint32_t load_le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xFF00) | ((v << 8) & 0xFF0000) | (v << 24);
}

void store_le32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
    p[2] = static_cast<std::uint8_t>(v >> 16);
    p[3] = static_cast<std::uint8_t>(v >> 24);
}

void store_le16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
}

bool read_exact(std::istream& in, std::uint8_t* dst, std::size_t n, std::size_t& got) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    got = static_cast<std::size_t>(in.gcount());
    return got == n;
}

}  // namespace

Reader Reader::open(const std::filesystem::path& path) {
    auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file) {
        throw CaptureError(path.string() + ": cannot open file");
    }
    try {
        return Reader(std::move(file));
    } catch (const CaptureError& e) {
        throw CaptureError(path.string() + ": " + e.what());
    }
}

Reader::Reader(std::unique_ptr<std::istream> in) : in_(std::move(in)) {
    std::array<std::uint8_t, kGlobalHeaderSize> hdr{};
    std::size_t got = 0;
    const bool complete = read_exact(*in_, hdr.data(), hdr.size(), got);
    if (got < 4) {
        throw CaptureError(got == 0 ? "not a pcap file (empty)" : "corrupt capture (truncated global header)");
    }
    const std::uint32_t magic = load_le32(hdr.data());
    if (magic == kMagicPcapng) {
        throw CaptureError("pcapng captures are not supported; convert with 'editcap -F pcap'");
    }
    if (magic == kMagicMicro || magic == kMagicNano) {
        swapped_ = false;
    } else if (bswap32(magic) == kMagicMicro || bswap32(magic) == kMagicNano) {
        swapped_ = true;
    } else {
        throw CaptureError("not a pcap file (unknown magic number)");
    }
    const std::uint32_t native_magic = swapped_ ? bswap32(magic) : magic;
    resolution_ = native_magic == kMagicNano ? Resolution::nano : Resolution::micro;
    if (!complete) {
        throw CaptureError("corrupt capture (truncated global header)");
    }

    snaplen_ = field32(hdr.data() + 16);
    const std::uint32_t link = field32(hdr.data() + 20) & 0x0FFFFFFF;  // upper bits carry FCS info
    switch (link) {
        case static_cast<std::uint32_t>(LinkType::ethernet):
        case static_cast<std::uint32_t>(LinkType::raw):
        case static_cast<std::uint32_t>(LinkType::linux_sll):
            link_type_ = static_cast<LinkType>(link);
            break;
        default:
            throw CaptureError("unsupported link type " + std::to_string(link) +
                               " (supported: 1 ethernet, 101 raw IP, 113 linux cooked)");
    }
}

std::uint32_t Reader::field32(const std::uint8_t* p) const {
    const std::uint32_t v = load_le32(p);
    return swapped_ ? bswap32(v) : v;
}

std::optional<RawRecord> Reader::next() {
    if (done_) {
        return std::nullopt;
    }
    std::array<std::uint8_t, kRecordHeaderSize> rh{};
    std::size_t got = 0;
    if (!read_exact(*in_, rh.data(), rh.size(), got)) {
        done_ = true;
        if (got != 0) {
            ++truncated_;
        }
        return std::nullopt;
    }
    const std::uint32_t ts_sec = field32(rh.data());
    const std::uint32_t ts_frac = field32(rh.data() + 4);
    const std::uint32_t incl_len = field32(rh.data() + 8);
    const std::uint32_t orig_len = field32(rh.data() + 12);
    if (incl_len > kMaxRecordBytes) {
        done_ = true;
        ++truncated_;
        return std::nullopt;
    }
    buf_.resize(incl_len);
    if (!read_exact(*in_, buf_.data(), incl_len, got)) {
        done_ = true;
        ++truncated_;
        return std::nullopt;
    }
    ++records_;

    const std::int64_t frac_ns = resolution_ == Resolution::nano ? static_cast<std::int64_t>(ts_frac)
                                                                  : static_cast<std::int64_t>(ts_frac) * 1000;
    RawRecord rec;
    rec.ts = Timestamp::from_parts(static_cast<std::int64_t>(ts_sec), frac_ns);
    rec.orig_len = orig_len;
    rec.data = std::span<const std::uint8_t>(buf_.data(), buf_.size());
    return rec;
}

Writer::Writer(const std::filesystem::path& path, LinkType link, Resolution res, std::uint32_t snaplen)
    : Writer(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc), link, res, snaplen) {
    if (!*out_) {
        throw CaptureError(path.string() + ": cannot open for writing");
    }
}

Writer::Writer(std::unique_ptr<std::ostream> out, LinkType link, Resolution res, std::uint32_t snaplen)
    : out_(std::move(out)), resolution_(res) {
    write_header(link, snaplen);
}

void Writer::write_header(LinkType link, std::uint32_t snaplen) {
    std::array<std::uint8_t, kGlobalHeaderSize> hdr{};
    store_le32(hdr.data(), resolution_ == Resolution::nano ? kMagicNano : kMagicMicro);
    store_le16(hdr.data() + 4, 2);
    store_le16(hdr.data() + 6, 4);
    store_le32(hdr.data() + 16, snaplen);
    store_le32(hdr.data() + 20, static_cast<std::uint32_t>(link));
    out_->write(reinterpret_cast<const char*>(hdr.data()), hdr.size());
}

void Writer::write(Timestamp ts, std::span<const std::uint8_t> frame, std::uint32_t orig_len) {
    std::array<std::uint8_t, kRecordHeaderSize> rh{};
    const std::int64_t sec = ts.ns / 1'000'000'000;
    const std::int64_t ns = ts.ns % 1'000'000'000;
    const std::int64_t frac = resolution_ == Resolution::nano ? ns : ns / 1000;
    store_le32(rh.data(), static_cast<std::uint32_t>(sec));
    store_le32(rh.data() + 4, static_cast<std::uint32_t>(frac));
    store_le32(rh.data() + 8, static_cast<std::uint32_t>(frame.size()));
    store_le32(rh.data() + 12, orig_len == 0 ? static_cast<std::uint32_t>(frame.size()) : orig_len);
    out_->write(reinterpret_cast<const char*>(rh.data()), rh.size());
    out_->write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    if (!*out_) {
        throw CaptureError("write failed");
    }
}

void Writer::flush() {
    out_->flush();
}

}  // namespace flowent::pcap
