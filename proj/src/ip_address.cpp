#include "flowent/net_types.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstdio>
#include <cstring>

namespace flowent {

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    IpAddress ip;
    ip.family = Family::v4;
    ip.bytes[0] = a;
    ip.bytes[1] = b;
    ip.bytes[2] = c;
    ip.bytes[3] = d;
    return ip;
}

IpAddress IpAddress::from_v4_bytes(const std::uint8_t* p) {
    return v4(p[0], p[1], p[2], p[3]);
}

IpAddress IpAddress::from_v6_bytes(const std::uint8_t* p) {
    IpAddress ip;
    ip.family = Family::v6;
    std::memcpy(ip.bytes.data(), p, 16);
    return ip;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    const std::string s(text);
    IpAddress ip;
    if (s.find(':') != std::string::npos) {
        if (inet_pton(AF_INET6, s.c_str(), ip.bytes.data()) != 1) {
            return std::nullopt;
        }
        ip.family = Family::v6;
        return ip;
    }
    if (inet_pton(AF_INET, s.c_str(), ip.bytes.data()) != 1) {
        return std::nullopt;
    }
    ip.family = Family::v4;
    return ip;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    const int af = family == Family::v6 ? AF_INET6 : AF_INET;
    if (inet_ntop(af, bytes.data(), buf, sizeof(buf)) == nullptr) {
        return {};
    }
    return buf;
}

std::string Timestamp::to_string() const {
    const bool negative = ns < 0;
    // Work in unsigned space so INT64_MIN does not overflow on negation.
    const std::uint64_t mag = negative ? 0 - static_cast<std::uint64_t>(ns) : static_cast<std::uint64_t>(ns);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%llu.%09llu", negative ? "-" : "",
                  static_cast<unsigned long long>(mag / 1'000'000'000ULL),
                  static_cast<unsigned long long>(mag % 1'000'000'000ULL));
    return buf;
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
    bool negative = false;
    if (!text.empty() && text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() || frac.size() > 9) {
        return std::nullopt;
    }
    std::int64_t sec = 0;
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), sec);
    if (ec != std::errc{} || p != whole.data() + whole.size()) {
        return std::nullopt;
    }
    std::int64_t nsec = 0;
    for (char c : frac) {
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        nsec = nsec * 10 + (c - '0');
    }
    for (std::size_t i = frac.size(); i < 9; ++i) {
        nsec *= 10;
    }
    const std::int64_t v = sec * 1'000'000'000 + nsec;
    return Timestamp{negative ? -v : v};
}

}  // namespace flowent
