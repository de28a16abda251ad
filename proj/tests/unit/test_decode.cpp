#include "flowent/decode.hpp"
#include "frame_builder.hpp"

#include <doctest.h>

#include <random>

using namespace flowent;
using namespace flowent::test;

namespace {

constexpr std::uint32_t kEth = 1;
constexpr std::uint32_t kRaw = 101;
constexpr std::uint32_t kSll = 113;

const IpAddress kA = IpAddress::v4(10, 0, 0, 1);
const IpAddress kB = IpAddress::v4(10, 0, 0, 2);

std::string payload_str(const PacketView& v) {
    return std::string(v.payload.begin(), v.payload.end());
}

}  // namespace

TEST_SUITE("decode") {

TEST_CASE("minimal Ethernet/IPv4/UDP frame") {
    const Bytes frame = udp_frame(kA, 5000, kB, 53, bytes_of("abcd"));
    // 14 Ethernet + 20 IPv4 + 8 UDP + 4 payload
    REQUIRE(frame.size() == 46);
    const auto r = decode_packet(frame, kEth, Timestamp{42});
    REQUIRE(r.ok());
    CHECK(r.view.protocol == Transport::udp);
    CHECK(static_cast<int>(r.view.protocol) == 17);
    CHECK(payload_str(r.view) == "abcd");
    CHECK(r.view.wire_payload_len == 4);
    CHECK(r.view.src_addr == kA);
    CHECK(r.view.dst_port == 53);
    CHECK(r.view.ts.ns == 42);
    CHECK_FALSE(r.view.tcp_flags.has_value());
}

TEST_CASE("Ethernet padding is not payload") {
    Bytes frame = udp_frame(kA, 5000, kB, 53, bytes_of("abcd"));
    frame.resize(60, 0);
    const auto r = decode_packet(frame, kEth);
    REQUIRE(r.ok());
    CHECK(payload_str(r.view) == "abcd");
}

TEST_CASE("ARP is not IP") {
    CHECK(decode_packet(arp_frame(), kEth).verdict == Verdict::not_ip);
}

TEST_CASE("pure ACK has an empty payload") {
    const Bytes frame = tcp_frame(kA, 40000, kB, 22, 1000, 2000, tcp_flag::ack);
    const auto r = decode_packet(frame, kEth);
    REQUIRE(r.ok());
    CHECK(r.view.payload.empty());
    CHECK(r.view.wire_payload_len == 0);
    CHECK(r.view.has_flag(tcp_flag::ack));
    CHECK(*r.view.tcp_seq == 1000);
    CHECK(*r.view.tcp_ack == 2000);
}

TEST_CASE("TCP options are skipped") {
    const Bytes l4 = tcp_segment(1, 2, 0, 0, tcp_flag::psh | tcp_flag::ack, bytes_of("data"), 12);
    const auto r = decode_packet(ethernet(kEtherIpv4, ipv4(kA, kB, 6, l4)), kEth);
    REQUIRE(r.ok());
    CHECK(payload_str(r.view) == "data");
}

TEST_CASE("IPv4 options are skipped") {
    const Bytes l4 = udp_datagram(1, 2, bytes_of("xy"));
    const auto r = decode_packet(ethernet(kEtherIpv4, ipv4(kA, kB, 17, l4, {.option_bytes = 8})), kEth);
    REQUIRE(r.ok());
    CHECK(payload_str(r.view) == "xy");
}

TEST_CASE("stacked VLAN tags") {
    const Bytes ip = ipv4(kA, kB, 17, udp_datagram(1, 2, bytes_of("vlan")));
    const auto r = decode_packet(ethernet(kEtherIpv4, ip, {0x88A8, 0x8100}), kEth);
    REQUIRE(r.ok());
    CHECK(payload_str(r.view) == "vlan");
}

TEST_CASE("raw IP and Linux cooked links") {
    const Bytes ip = ipv4(kA, kB, 17, udp_datagram(1, 2, bytes_of("raw")));
    const auto raw = decode_packet(ip, kRaw);
    REQUIRE(raw.ok());
    CHECK(payload_str(raw.view) == "raw");

    Bytes sll{0, 0, 0, 1, 0, 6, 1, 2, 3, 4, 5, 6, 0, 0};
    put16(sll, kEtherIpv4);
    append(sll, ip);
    const auto cooked = decode_packet(sll, kSll);
    REQUIRE(cooked.ok());
    CHECK(payload_str(cooked.view) == "raw");

    CHECK(decode_packet(ip, 9999).verdict == Verdict::unsupported_link);
}

TEST_CASE("IPv6 TCP and extension headers") {
    const IpAddress a = *IpAddress::parse("2001:db8::1");
    const IpAddress b = *IpAddress::parse("2001:db8::2");
    const Bytes tcp = tcp_segment(40000, 443, 1, 0, tcp_flag::ack, bytes_of("v6"));

    const auto plain = decode_packet(ethernet(kEtherIpv6, ipv6(a, b, 6, tcp)), kEth);
    REQUIRE(plain.ok());
    CHECK(payload_str(plain.view) == "v6");
    CHECK(plain.view.src_addr == a);

    // Hop-by-hop then destination options, then TCP.
    const Bytes chain = ipv6_ext(60, ipv6_ext(6, tcp));
    const auto ext = decode_packet(ethernet(kEtherIpv6, ipv6(a, b, 0, chain)), kEth);
    REQUIRE(ext.ok());
    CHECK(payload_str(ext.view) == "v6");

    // First fragment (offset 0) is decoded; later fragments are not.
    Bytes first_frag{6, 0, 0, 0x01, 0, 0, 0, 1};
    append(first_frag, tcp);
    CHECK(decode_packet(ethernet(kEtherIpv6, ipv6(a, b, 44, first_frag)), kEth).ok());
    Bytes later{6, 0, 0x00, 0x08, 0, 0, 0, 1};
    append(later, tcp);
    CHECK(decode_packet(ethernet(kEtherIpv6, ipv6(a, b, 44, later)), kEth).verdict == Verdict::fragment);

    // ESP is an extension we do not walk.
    CHECK(decode_packet(ethernet(kEtherIpv6, ipv6(a, b, 50, tcp)), kEth).verdict == Verdict::ipv6_extension);
}

TEST_CASE("non-transport and fragments") {
    const Bytes icmp{8, 0, 0, 0, 0, 1, 0, 1};
    CHECK(decode_packet(ethernet(kEtherIpv4, ipv4(kA, kB, 1, icmp)), kEth).verdict == Verdict::not_transport);

    const Bytes l4 = udp_datagram(1, 2, bytes_of("frag"));
    CHECK(decode_packet(ethernet(kEtherIpv4, ipv4(kA, kB, 17, l4, {.frag = 0x2000})), kEth).ok());
    CHECK(decode_packet(ethernet(kEtherIpv4, ipv4(kA, kB, 17, l4, {.frag = 0x0010})), kEth).verdict ==
          Verdict::fragment);
}

TEST_CASE("snaplen truncation keeps the wire length") {
    const Bytes frame = tcp_frame(kA, 1, kB, 2, 0, 0, tcp_flag::ack, bytes_of("0123456789"));
    const std::span<const std::uint8_t> cut(frame.data(), frame.size() - 4);
    const auto r = decode_packet(cut, kEth);
    REQUIRE(r.ok());
    CHECK(payload_str(r.view) == "012345");
    CHECK(r.view.wire_payload_len == 10);
    CHECK(r.view.truncated());
}

TEST_CASE("header truncation and malformed lengths") {
    const Bytes frame = tcp_frame(kA, 1, kB, 2, 0, 0, tcp_flag::ack, bytes_of("x"));
    CHECK(decode_packet(std::span(frame).first(10), kEth).verdict == Verdict::truncated_header);
    CHECK(decode_packet(std::span(frame).first(14 + 12), kEth).verdict == Verdict::truncated_header);
    CHECK(decode_packet(std::span(frame).first(14 + 20 + 10), kEth).verdict == Verdict::truncated_header);

    Bytes bad_version = frame;
    bad_version[14] = 0x55;
    CHECK(decode_packet(bad_version, kEth).verdict == Verdict::malformed);

    Bytes bad_ihl = frame;
    bad_ihl[14] = 0x44;
    CHECK(decode_packet(bad_ihl, kEth).verdict == Verdict::malformed);

    Bytes bad_offset = frame;
    bad_offset[14 + 20 + 12] = 0x30;  // data offset 3 words
    CHECK(decode_packet(bad_offset, kEth).verdict == Verdict::malformed);

    Bytes udp = udp_frame(kA, 1, kB, 2, bytes_of("abc"));
    udp[14 + 20 + 5] = 200;  // UDP length beyond the IP payload
    CHECK(decode_packet(udp, kEth).verdict == Verdict::malformed);
}

TEST_CASE("zero IPv4 total length uses the captured length") {
    Bytes frame = tcp_frame(kA, 1, kB, 2, 0, 0, tcp_flag::ack, bytes_of("offload"));
    frame[14 + 2] = 0;
    frame[14 + 3] = 0;
    const auto r = decode_packet(frame, kEth);
    REQUIRE(r.ok());
    CHECK(payload_str(r.view) == "offload");
}

TEST_CASE("property: random and truncated input never escapes as an exception") {
    std::mt19937_64 rng(31);
    DecodeStats stats;
    const Bytes good = tcp_frame(kA, 1, kB, 2, 7, 9, tcp_flag::ack, bytes_of("payload bytes"));
    for (int i = 0; i < 20000; ++i) {
        Bytes b;
        if (i % 2 == 0) {
            b.resize(rng() % 128);
            for (auto& x : b) x = static_cast<std::uint8_t>(rng());
        } else {
            b = good;
            b.resize(rng() % (good.size() + 1));
            if (!b.empty()) b[rng() % b.size()] ^= static_cast<std::uint8_t>(rng());
        }
        const std::uint32_t link = std::array<std::uint32_t, 4>{kEth, kRaw, kSll, 0}[rng() % 4];
        DecodeResult r;
        CHECK_NOTHROW(r = decode_packet(b, link));
        stats.record(r.verdict);
        if (r.ok()) {
            CHECK(r.view.payload.size() <= b.size());
            CHECK(r.view.payload.size() <= r.view.wire_payload_len);
        }
    }
    CHECK(stats.total() == 20000);
}

}  // TEST_SUITE
