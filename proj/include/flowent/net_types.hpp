#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flowent {

/// IPv4 or IPv6 address. IPv4 addresses occupy the first four bytes.
struct IpAddress {
    enum class Family : std::uint8_t { v4 = 4, v6 = 6 };

    Family family = Family::v4;
    std::array<std::uint8_t, 16> bytes{};

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
    static IpAddress from_v4_bytes(const std::uint8_t* p);
    static IpAddress from_v6_bytes(const std::uint8_t* p);
    static std::optional<IpAddress> parse(std::string_view text);

    std::string to_string() const;

    friend auto operator<=>(const IpAddress&, const IpAddress&) = default;
    friend bool operator==(const IpAddress&, const IpAddress&) = default;
};

/// Capture timestamp in nanoseconds since the Unix epoch.
struct Timestamp {
    std::int64_t ns = 0;

    static constexpr Timestamp from_parts(std::int64_t sec, std::int64_t nsec) {
        return Timestamp{sec * 1'000'000'000 + nsec};
    }
    static constexpr Timestamp from_seconds(double s) {
        const double ns = s * 1e9;
        return Timestamp{static_cast<std::int64_t>(ns < 0 ? ns - 0.5 : ns + 0.5)};
    }

    double seconds() const { return static_cast<double>(ns) / 1e9; }

    // "<sec>.<9 digits>"; negative values keep a leading '-'.
    std::string to_string() const;
    static std::optional<Timestamp> parse(std::string_view text);

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
    friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

enum class Transport : std::uint8_t { tcp = 6, udp = 17 };

namespace tcp_flag {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
inline constexpr std::uint8_t urg = 0x20;
}  // namespace tcp_flag

}  // namespace flowent
