#pragma once

#include "flowent/net_types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flowent {

enum class Termination : std::uint8_t { fin, rst, timeout, capture_end };

std::string_view to_string(Termination t);
std::optional<Termination> parse_termination(std::string_view s);

/// Finalized statistics for one direction of a flow.
struct DirectionSummary {
    std::uint64_t packets = 0;
    std::uint64_t payload_bytes = 0;
    double final_entropy = 0.0;        // bits/byte over the accepted payload; 0 if none
    double lifecycle_std = 0.0;        // std of cumulative entropy after each payload packet
    double mean_packet_entropy = 0.0;  // moments of individual packet payload entropies
    double std_packet_entropy = 0.0;

    friend bool operator==(const DirectionSummary&, const DirectionSummary&) = default;
};

/// One finalized bidirectional flow. `src` is always the initiator, so `out`
/// is initiator -> responder traffic.
struct FlowRecord {
    std::string dataset_id;
    IpAddress src_addr;
    std::uint16_t src_port = 0;
    IpAddress dst_addr;
    std::uint16_t dst_port = 0;
    Transport protocol = Transport::tcp;
    std::string service;
    Timestamp first_ts;
    Timestamp last_ts;
    DirectionSummary out;
    DirectionSummary in;
    Termination termination = Termination::capture_end;
    bool truncated = false;
    std::string label;

    std::int64_t duration_ns() const noexcept { return last_ts.ns - first_ts.ns; }

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

}  // namespace flowent
