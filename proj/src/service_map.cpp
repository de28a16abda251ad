#include "flowent/service_map.hpp"

#include "flowent/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flowent {

// Generated from data/services.csv at configure time.
extern const char* const kDefaultServicesCsv;

namespace {

std::size_t slot(ServiceProtocol p) {
    return static_cast<std::size_t>(p);
}

ServiceProtocol parse_protocol(std::string_view s) {
    if (s == "tcp") return ServiceProtocol::tcp;
    if (s == "udp") return ServiceProtocol::udp;
    if (s == "any" || s == "*") return ServiceProtocol::any;
    throw std::invalid_argument("protocol must be tcp, udp or any, got '" + std::string(s) + "'");
}

}  // namespace

std::string unmapped_service_name(std::uint16_t port) {
    return "port-" + std::to_string(port);
}

ServiceResolution resolve_service(std::uint16_t initiator_port, std::uint16_t responder_port, Transport proto,
                                  const ServiceMap& map) {
    if (const std::string* name = map.find(responder_port, proto)) {
        return {*name, responder_port};
    }
    if (const std::string* name = map.find(initiator_port, proto)) {
        return {*name, initiator_port};
    }
    return {unmapped_service_name(responder_port), responder_port};
}

std::optional<std::uint16_t> parse_unmapped_service_name(std::string_view name) {
    constexpr std::string_view prefix = "port-";
    if (name.substr(0, prefix.size()) != prefix) {
        return std::nullopt;
    }
    try {
        const std::uint64_t v = csv::parse_uint(name.substr(prefix.size()));
        if (v > 65535) {
            return std::nullopt;
        }
        return static_cast<std::uint16_t>(v);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

ServiceMap ServiceMap::defaults() {
    static const ServiceMap map = parse(kDefaultServicesCsv, "<built-in service map>");
    return map;
}

ServiceMap ServiceMap::parse(std::string_view text, std::string_view origin) {
    ServiceMap map;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view t = csv::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto fields = csv::split_line(t);
        if (fields.size() == 3 && csv::trim(fields[0]) == "port") {
            continue;
        }
        const auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno) + ": "; };
        if (fields.size() != 3) {
            throw std::runtime_error(where() + "expected 3 fields (port,protocol,service)");
        }
        ServiceEntry e;
        try {
            const std::uint64_t port = csv::parse_uint(fields[0]);
            if (port > 65535) {
                throw std::invalid_argument("port out of range");
            }
            e.port = static_cast<std::uint16_t>(port);
            e.protocol = parse_protocol(csv::trim(fields[1]));
        } catch (const std::invalid_argument& ex) {
            throw std::runtime_error(where() + ex.what());
        }
        e.name = std::string(csv::trim(fields[2]));
        if (e.name.empty()) {
            throw std::runtime_error(where() + "empty service name");
        }
        try {
            map.add(std::move(e));
        } catch (const std::invalid_argument& ex) {
            throw std::runtime_error(where() + ex.what());
        }
    }
    return map;
}

ServiceMap ServiceMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(path.string() + ": cannot open service map");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void ServiceMap::add(ServiceEntry entry) {
    auto& idx = index_[slot(entry.protocol)];
    if (idx.empty()) {
        idx.assign(65536, 0);
    }
    if (idx[entry.port] != 0) {
        throw std::invalid_argument("duplicate entry for port " + std::to_string(entry.port));
    }
    entries_.push_back(std::move(entry));
    idx[entries_.back().port] = static_cast<std::uint32_t>(entries_.size());
}

const std::string* ServiceMap::find(std::uint16_t port, Transport proto) const {
    const ServiceProtocol specific = proto == Transport::tcp ? ServiceProtocol::tcp : ServiceProtocol::udp;
    for (ServiceProtocol p : {specific, ServiceProtocol::any}) {
        const auto& idx = index_[slot(p)];
        if (!idx.empty() && idx[port] != 0) {
            return &entries_[idx[port] - 1].name;
        }
    }
    return nullptr;
}

std::string ServiceMap::lookup(std::uint16_t port, Transport proto) const {
    if (const std::string* name = find(port, proto)) {
        return *name;
    }
    return unmapped_service_name(port);
}

std::optional<std::uint16_t> ServiceMap::port_of(std::string_view name) const {
    std::optional<std::uint16_t> best;
    for (const auto& e : entries_) {
        if (e.name == name && (!best || e.port < *best)) {
            best = e.port;
        }
    }
    return best;
}

}  // namespace flowent
