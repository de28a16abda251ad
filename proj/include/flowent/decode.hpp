#pragma once

#include "flowent/net_types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace flowent {

/// Decoded transport-layer view of one captured packet. `payload` points into
/// the capture buffer and is only valid until the reader advances.
struct PacketView {
    Timestamp ts;
    IpAddress src_addr;
    IpAddress dst_addr;
    Transport protocol = Transport::tcp;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::optional<std::uint8_t> tcp_flags;
    std::optional<std::uint32_t> tcp_seq;
    std::optional<std::uint32_t> tcp_ack;
    std::span<const std::uint8_t> payload;  // captured bytes only
    std::uint32_t wire_payload_len = 0;     // length implied by the headers

    bool truncated() const noexcept { return payload.size() < wire_payload_len; }
    bool has_flag(std::uint8_t f) const noexcept { return tcp_flags && (*tcp_flags & f) != 0; }
};

enum class Verdict : std::uint8_t {
    flow,             // TCP or UDP packet with a usable PacketView
    not_ip,           // ARP, LLDP, 802.3 frames, ...
    not_transport,    // IP but neither TCP nor UDP (ICMP, GRE, ...)
    fragment,         // non-first IP fragment
    ipv6_extension,   // IPv6 extension header outside the handled set
    truncated_header, // capture ended inside a link/IP/transport header
    malformed,        // inconsistent length or version fields
    unsupported_link,
};
inline constexpr std::size_t kVerdictCount = 8;

std::string_view to_string(Verdict v);

struct DecodeStats {
    std::array<std::uint64_t, kVerdictCount> by_verdict{};
    std::uint64_t truncated_payloads = 0;

    void record(Verdict v) noexcept { ++by_verdict[static_cast<std::size_t>(v)]; }
    std::uint64_t count(Verdict v) const noexcept { return by_verdict[static_cast<std::size_t>(v)]; }
    std::uint64_t total() const noexcept;
    std::uint64_t non_flow() const noexcept { return total() - count(Verdict::flow); }
};

struct DecodeResult {
    Verdict verdict = Verdict::malformed;
    PacketView view;  // meaningful only when verdict == Verdict::flow

    bool ok() const noexcept { return verdict == Verdict::flow; }
};

/// Decode one captured record. Never reads past raw.size(); every failure is
/// reported as a verdict rather than an exception.
DecodeResult decode_packet(std::span<const std::uint8_t> raw, std::uint32_t link_type, Timestamp ts = {});

}  // namespace flowent
