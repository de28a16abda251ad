#include "flowent/decode.hpp"

#include <algorithm>
#include <numeric>

namespace flowent {
namespace {

constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRaw = 101;
constexpr std::uint32_t kLinkSll = 113;

constexpr std::uint16_t kEtherIPv4 = 0x0800;
constexpr std::uint16_t kEtherIPv6 = 0x86DD;
constexpr std::uint16_t kEtherVlan = 0x8100;
constexpr std::uint16_t kEtherQinQ = 0x88A8;
constexpr std::uint16_t kEtherQinQOld = 0x9100;

constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

/// Bounds-checked cursor over the captured bytes.
class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool has(std::size_t n) const noexcept { return n <= bytes_.size(); }
    std::size_t size() const noexcept { return bytes_.size(); }
    const std::uint8_t* data() const noexcept { return bytes_.data(); }
    std::uint8_t u8(std::size_t off) const noexcept { return bytes_[off]; }
    std::uint16_t be16(std::size_t off) const noexcept {
        return static_cast<std::uint16_t>(bytes_[off] << 8 | bytes_[off + 1]);
    }
    std::uint32_t be32(std::size_t off) const noexcept {
        return static_cast<std::uint32_t>(bytes_[off]) << 24 | static_cast<std::uint32_t>(bytes_[off + 1]) << 16 |
               static_cast<std::uint32_t>(bytes_[off + 2]) << 8 | bytes_[off + 3];
    }
    Cursor skip(std::size_t n) const noexcept { return Cursor(bytes_.subspan(std::min(n, bytes_.size()))); }
    Cursor first(std::size_t n) const noexcept { return Cursor(bytes_.first(std::min(n, bytes_.size()))); }
    std::span<const std::uint8_t> span() const noexcept { return bytes_; }

private:
    std::span<const std::uint8_t> bytes_;
};

struct IpLayer {
    IpAddress src;
    IpAddress dst;
    std::uint8_t protocol = 0;
    Cursor body{{}};                  // captured transport bytes, padding removed
    std::uint32_t wire_body_len = 0;  // transport length from the IP header
};

DecodeResult verdict(Verdict v) {
    DecodeResult r;
    r.verdict = v;
    return r;
}

bool is_ipv6_extension(std::uint8_t nh) {
    switch (nh) {
        case 50: case 51: case 59: case 135: case 139: case 140: case 253: case 254:
            return true;
        default:
            return false;
    }
}

std::optional<Verdict> decode_ipv4(Cursor c, IpLayer& out) {
    if (!c.has(20)) {
        return Verdict::truncated_header;
    }
    const std::uint8_t vihl = c.u8(0);
    if ((vihl >> 4) != 4) {
        return Verdict::malformed;
    }
    const std::size_t ihl = static_cast<std::size_t>(vihl & 0x0F) * 4;
    if (ihl < 20) {
        return Verdict::malformed;
    }
    if (!c.has(ihl)) {
        return Verdict::truncated_header;
    }
    std::size_t total_len = c.be16(2);
    if (total_len == 0) {
        // Segmentation offload captures leave the length unset.
        total_len = c.size();
    }
    if (total_len < ihl) {
        return Verdict::malformed;
    }
    const std::uint16_t frag = c.be16(6);
    if ((frag & 0x1FFF) != 0) {
        return Verdict::fragment;
    }
    out.protocol = c.u8(9);
    out.src = IpAddress::from_v4_bytes(c.data() + 12);
    out.dst = IpAddress::from_v4_bytes(c.data() + 16);
    out.body = c.first(total_len).skip(ihl);
    out.wire_body_len = static_cast<std::uint32_t>(total_len - ihl);
    return std::nullopt;
}

std::optional<Verdict> decode_ipv6(Cursor c, IpLayer& out) {
    if (!c.has(40)) {
        return Verdict::truncated_header;
    }
    if ((c.u8(0) >> 4) != 6) {
        return Verdict::malformed;
    }
    const std::size_t payload_len = c.be16(4);
    if (payload_len == 0) {
        return Verdict::malformed;  // jumbograms are not handled
    }
    out.src = IpAddress::from_v6_bytes(c.data() + 8);
    out.dst = IpAddress::from_v6_bytes(c.data() + 24);
    std::uint8_t nh = c.u8(6);
    Cursor body = c.skip(40).first(payload_len);
    std::size_t remaining = payload_len;

    // Hop-by-hop, routing, destination options and first fragments are walked;
    // anything else ends decoding.
    for (int depth = 0; depth < 8; ++depth) {
        if (nh == kProtoTcp || nh == kProtoUdp) {
            out.protocol = nh;
            out.body = body;
            out.wire_body_len = static_cast<std::uint32_t>(remaining);
            return std::nullopt;
        }
        std::size_t ext_len = 0;
        if (nh == 0 || nh == 43 || nh == 60) {
            if (!body.has(2)) {
                return Verdict::truncated_header;
            }
            ext_len = (static_cast<std::size_t>(body.u8(1)) + 1) * 8;
        } else if (nh == 44) {
            if (!body.has(8)) {
                return Verdict::truncated_header;
            }
            if ((body.be16(2) >> 3) != 0) {
                return Verdict::fragment;
            }
            ext_len = 8;
        } else if (is_ipv6_extension(nh)) {
            return Verdict::ipv6_extension;
        } else {
            return Verdict::not_transport;
        }
        if (ext_len > remaining) {
            return Verdict::malformed;
        }
        if (!body.has(ext_len)) {
            return Verdict::truncated_header;
        }
        nh = body.u8(0);
        body = body.skip(ext_len);
        remaining -= ext_len;
    }
    return Verdict::ipv6_extension;
}

std::optional<Verdict> decode_ip(Cursor c, std::uint16_t ethertype, IpLayer& out) {
    switch (ethertype) {
        case kEtherIPv4:
            return decode_ipv4(c, out);
        case kEtherIPv6:
            return decode_ipv6(c, out);
        default:
            return Verdict::not_ip;
    }
}

DecodeResult decode_transport(const IpLayer& ip, Timestamp ts) {
    DecodeResult r;
    PacketView& v = r.view;
    v.ts = ts;
    v.src_addr = ip.src;
    v.dst_addr = ip.dst;
    const Cursor& c = ip.body;

    std::size_t header_len = 0;
    std::uint32_t wire_payload = 0;
    if (ip.protocol == kProtoTcp) {
        if (!c.has(20)) {
            return verdict(ip.wire_body_len < 20 ? Verdict::malformed : Verdict::truncated_header);
        }
        header_len = static_cast<std::size_t>(c.u8(12) >> 4) * 4;
        if (header_len < 20 || header_len > ip.wire_body_len) {
            return verdict(Verdict::malformed);
        }
        if (!c.has(header_len)) {
            return verdict(Verdict::truncated_header);
        }
        v.protocol = Transport::tcp;
        v.tcp_seq = c.be32(4);
        v.tcp_ack = c.be32(8);
        v.tcp_flags = static_cast<std::uint8_t>(c.u8(13) & 0x3F);
        wire_payload = static_cast<std::uint32_t>(ip.wire_body_len - header_len);
    } else if (ip.protocol == kProtoUdp) {
        if (!c.has(8)) {
            return verdict(ip.wire_body_len < 8 ? Verdict::malformed : Verdict::truncated_header);
        }
        const std::uint16_t udp_len = c.be16(4);
        if (udp_len < 8 || udp_len > ip.wire_body_len) {
            return verdict(Verdict::malformed);
        }
        header_len = 8;
        v.protocol = Transport::udp;
        wire_payload = static_cast<std::uint32_t>(udp_len - 8);
    } else {
        return verdict(Verdict::not_transport);
    }
    v.src_port = c.be16(0);
    v.dst_port = c.be16(2);
    const Cursor payload = c.skip(header_len);
    v.payload = payload.span().first(std::min<std::size_t>(payload.size(), wire_payload));
    v.wire_payload_len = wire_payload;
    r.verdict = Verdict::flow;
    return r;
}

}  // namespace

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::flow: return "flow";
        case Verdict::not_ip: return "not_ip";
        case Verdict::not_transport: return "not_transport";
        case Verdict::fragment: return "fragment";
        case Verdict::ipv6_extension: return "ipv6_extension";
        case Verdict::truncated_header: return "truncated_header";
        case Verdict::malformed: return "malformed";
        case Verdict::unsupported_link: return "unsupported_link";
    }
    return "unknown";
}

std::uint64_t DecodeStats::total() const noexcept {
    return std::accumulate(by_verdict.begin(), by_verdict.end(), std::uint64_t{0});
}

DecodeResult decode_packet(std::span<const std::uint8_t> raw, std::uint32_t link_type, Timestamp ts) {
    Cursor c(raw);
    std::uint16_t ethertype = 0;
    Cursor net{{}};

    switch (link_type) {
        case kLinkEthernet: {
            if (!c.has(14)) {
                return verdict(Verdict::truncated_header);
            }
            std::size_t off = 12;
            ethertype = c.be16(off);
            while (ethertype == kEtherVlan || ethertype == kEtherQinQ || ethertype == kEtherQinQOld) {
                off += 4;
                if (!c.has(off + 2)) {
                    return verdict(Verdict::truncated_header);
                }
                ethertype = c.be16(off);
            }
            net = c.skip(off + 2);
            break;
        }
        case kLinkSll:
            if (!c.has(16)) {
                return verdict(Verdict::truncated_header);
            }
            ethertype = c.be16(14);
            net = c.skip(16);
            break;
        case kLinkRaw:
            if (!c.has(1)) {
                return verdict(Verdict::truncated_header);
            }
            switch (c.u8(0) >> 4) {
                case 4: ethertype = kEtherIPv4; break;
                case 6: ethertype = kEtherIPv6; break;
                default: return verdict(Verdict::not_ip);
            }
            net = c;
            break;
        default:
            return verdict(Verdict::unsupported_link);
    }

    IpLayer ip;
    if (auto v = decode_ip(net, ethertype, ip)) {
        return verdict(*v);
    }
    return decode_transport(ip, ts);
}

}  // namespace flowent
