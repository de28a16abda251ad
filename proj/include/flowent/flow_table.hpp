#pragma once

// Stateful bidirectional flow cache with per-direction payload entropy.

#include "flowent/decode.hpp"
#include "flowent/flow_record.hpp"
#include "flowent/histogram.hpp"
#include "flowent/service_map.hpp"

#include <compare>
#include <cstdint>
#include <list>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace flowent {

struct Endpoint {
    IpAddress addr;
    std::uint16_t port = 0;

    friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// 5-tuple with the smaller endpoint first, so both directions share a key.
struct FlowKey {
    Endpoint a;
    Endpoint b;
    Transport protocol = Transport::tcp;

    static FlowKey of(const PacketView& pkt);

    friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
    friend bool operator==(const FlowKey&, const FlowKey&) = default;
};

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const noexcept;
};

/// Streaming mean / variance (Welford). Variance is the population variance.
struct RunningMoments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept;
    double variance() const noexcept { return n == 0 ? 0.0 : m2 / static_cast<double>(n); }
    double stddev() const noexcept;
};

/// Tracks which TCP sequence ranges of one direction have already been
/// counted. Sequence numbers are unwrapped into 64-bit offsets from the first
/// observed value.
class SequenceTracker {
public:
    using Range = std::pair<std::uint32_t, std::uint32_t>;  // [begin, end) offsets into a segment

    static constexpr std::size_t kMaxIslands = 64;

    bool initialized() const noexcept { return initialized_; }
    // `first_data` is the sequence number of the first payload byte.
    void start(std::uint32_t first_data) noexcept;

    // Marks [seq, seq + len) as seen and appends the previously unseen parts,
    // as offsets relative to seq, to `fresh`.
    void accept(std::uint32_t seq, std::uint32_t len, std::vector<Range>& fresh);

private:
    std::int64_t unwrap(std::uint32_t seq) noexcept;

    bool initialized_ = false;
    std::uint32_t ref_raw_ = 0;
    std::int64_t ref_rel_ = 0;
    std::int64_t contiguous_ = 0;  // everything below this offset has been seen
    std::vector<std::pair<std::int64_t, std::int64_t>> islands_;  // seen ranges above contiguous_
};

struct DirectionStats {
    SymbolHistogram hist;
    std::uint64_t payload_bytes = 0;
    std::uint64_t packets = 0;
    std::uint64_t payload_packets = 0;
    double cum_entropy_last = 0.0;
    RunningMoments lifecycle;   // cumulative entropy after each payload packet
    RunningMoments per_packet;  // entropy of each packet's accepted payload

    SequenceTracker seq;
    std::optional<std::uint32_t> fin_end;   // sequence number just past our FIN
    std::optional<std::uint32_t> last_ack;  // highest ACK we have sent
};

enum class TcpPhase : std::uint8_t { fresh, established, fin_wait, closed };

struct FlowState {
    FlowKey key;
    Endpoint initiator;
    Endpoint responder;
    Timestamp first_ts;
    Timestamp last_ts;
    DirectionStats out;  // initiator -> responder
    DirectionStats in;
    TcpPhase tcp_phase = TcpPhase::fresh;
    bool truncated = false;
};

struct FlowConfig {
    std::int64_t tcp_timeout_ns = 300'000'000'000;
    std::int64_t udp_timeout_ns = 120'000'000'000;
    Estimator estimator = Estimator::mle;
    std::shared_ptr<const ServiceMap> services;  // defaults() when null
    std::string dataset_id;
    std::string label;
};

// Builds the record for a completed flow.
FlowRecord finalize(const FlowState& state, Termination how, const FlowConfig& config);

/// Single-writer flow cache. Feed packets in capture order with ingest(),
/// then call flush() at end of input.
class FlowTable {
public:
    explicit FlowTable(FlowConfig config = {});

    // Appends any flows completed by this packet (or idle-expired by its
    // timestamp) to `done`.
    void ingest(const PacketView& pkt, std::vector<FlowRecord>& done);
    std::vector<FlowRecord> ingest(const PacketView& pkt);

    // Finalizes every cached flow as capture_end, ordered by first_ts.
    std::vector<FlowRecord> flush();

    std::size_t size() const noexcept { return flows_.size(); }
    std::size_t peak_size() const noexcept { return peak_; }
    std::uint64_t packets_ingested() const noexcept { return packets_; }
    std::uint64_t payload_bytes_accepted() const noexcept { return accepted_bytes_; }
    const FlowConfig& config() const noexcept { return config_; }

private:
    struct Entry {
        FlowState state;
        std::list<FlowKey>::iterator lru;
    };
    using Map = std::unordered_map<FlowKey, Entry, FlowKeyHash>;

    void expire_idle(Timestamp now, std::vector<FlowRecord>& done);
    Map::iterator create(const FlowKey& key, const PacketView& pkt);
    void erase(Map::iterator it);
    std::list<FlowKey>& lru_for(Transport t) { return t == Transport::tcp ? tcp_lru_ : udp_lru_; }
    std::int64_t timeout_for(Transport t) const {
        return t == Transport::tcp ? config_.tcp_timeout_ns : config_.udp_timeout_ns;
    }
    // Returns true when the flow has terminated.
    std::optional<Termination> update(FlowState& st, const PacketView& pkt);
    void accept_payload(DirectionStats& dir, const PacketView& pkt);

    FlowConfig config_;
    Map flows_;
    std::list<FlowKey> tcp_lru_;  // least recently active first
    std::list<FlowKey> udp_lru_;
    std::vector<SequenceTracker::Range> fresh_;  // scratch
    std::size_t peak_ = 0;
    std::uint64_t packets_ = 0;
    std::uint64_t accepted_bytes_ = 0;
};

}  // namespace flowent
