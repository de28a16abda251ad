#pragma once

#include "flowent/net_types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowent {

enum class ServiceProtocol : std::uint8_t { tcp, udp, any };

struct ServiceEntry {
    std::uint16_t port = 0;
    ServiceProtocol protocol = ServiceProtocol::any;
    std::string name;
};

/// Port + transport -> service name. Lookup is total: unmapped ports resolve
/// to "port-<n>". A protocol-specific entry wins over an "any" entry.
class ServiceMap {
public:
    // The built-in table (same content as data/services.csv).
    static ServiceMap defaults();

    // `port,protocol,service` CSV. Blank lines, '#' comments and a literal
    // header row are ignored. Throws std::runtime_error naming the line on
    // parse errors or duplicate (port, protocol) pairs.
    static ServiceMap parse(std::string_view csv, std::string_view origin = "<service map>");
    static ServiceMap load(const std::filesystem::path& path);

    void add(ServiceEntry entry);

    const std::string* find(std::uint16_t port, Transport proto) const;
    std::string lookup(std::uint16_t port, Transport proto) const;
    // Lowest port mapped to `name`, if any.
    std::optional<std::uint16_t> port_of(std::string_view name) const;

    const std::vector<ServiceEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<ServiceEntry> entries_;
    // index_[proto][port] -> entries_ position + 1 (0 = unmapped)
    std::vector<std::uint32_t> index_[3];
};

struct ServiceResolution {
    std::string name;
    std::uint16_t port = 0;

    friend bool operator==(const ServiceResolution&, const ServiceResolution&) = default;
};

// The responder's port names the service. If it is unmapped but the
// initiator's port is mapped, the initiator's port is used instead; otherwise
// the result is "port-<responder port>".
ServiceResolution resolve_service(std::uint16_t initiator_port, std::uint16_t responder_port, Transport proto,
                                  const ServiceMap& map);

std::string unmapped_service_name(std::uint16_t port);

// Inverse of unmapped_service_name.
std::optional<std::uint16_t> parse_unmapped_service_name(std::string_view name);

}  // namespace flowent
