#include "flowent/flow_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace flowent {
namespace {

// Serial-number comparison (RFC 1982) for 32-bit TCP sequence space.
bool seq_geq(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::int32_t>(a - b) >= 0;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
}

std::uint64_t hash_endpoint(const Endpoint& e) {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    std::memcpy(&lo, e.addr.bytes.data(), 8);
    std::memcpy(&hi, e.addr.bytes.data() + 8, 8);
    std::uint64_t h = mix(lo, hi);
    return mix(h, static_cast<std::uint64_t>(e.port) << 8 | static_cast<std::uint64_t>(e.addr.family));
}

DirectionSummary summarize(const DirectionStats& d, Estimator est) {
    DirectionSummary s;
    s.packets = d.packets;
    s.payload_bytes = d.payload_bytes;
    s.final_entropy = d.payload_bytes == 0 ? 0.0 : entropy(d.hist, est);
    s.lifecycle_std = d.lifecycle.stddev();
    s.mean_packet_entropy = d.per_packet.n == 0 ? 0.0 : d.per_packet.mean;
    s.std_packet_entropy = d.per_packet.stddev();
    return s;
}

}  // namespace

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::fin: return "fin";
        case Termination::rst: return "rst";
        case Termination::timeout: return "timeout";
        case Termination::capture_end: return "capture_end";
    }
    return "capture_end";
}

std::optional<Termination> parse_termination(std::string_view s) {
    for (Termination t : {Termination::fin, Termination::rst, Termination::timeout, Termination::capture_end}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

FlowKey FlowKey::of(const PacketView& pkt) {
    const Endpoint src{pkt.src_addr, pkt.src_port};
    const Endpoint dst{pkt.dst_addr, pkt.dst_port};
    FlowKey k;
    k.protocol = pkt.protocol;
    if (src <= dst) {
        k.a = src;
        k.b = dst;
    } else {
        k.a = dst;
        k.b = src;
    }
    return k;
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
    std::uint64_t h = mix(hash_endpoint(k.a), hash_endpoint(k.b));
    return static_cast<std::size_t>(mix(h, static_cast<std::uint64_t>(k.protocol)));
}

void RunningMoments::add(double x) noexcept {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
}

double RunningMoments::stddev() const noexcept {
    return std::sqrt(std::max(0.0, variance()));
}

void SequenceTracker::start(std::uint32_t first_data) noexcept {
    initialized_ = true;
    ref_raw_ = first_data;
    ref_rel_ = 0;
    contiguous_ = 0;
    islands_.clear();
}

std::int64_t SequenceTracker::unwrap(std::uint32_t seq) noexcept {
    const std::int64_t rel = ref_rel_ + static_cast<std::int32_t>(seq - ref_raw_);
    if (rel > ref_rel_) {
        ref_raw_ = seq;
        ref_rel_ = rel;
    }
    return rel;
}

void SequenceTracker::accept(std::uint32_t seq, std::uint32_t len, std::vector<Range>& fresh) {
    if (!initialized_) {
        start(seq);
    }
    if (len == 0) {
        return;
    }
    const std::int64_t seg_begin = unwrap(seq);
    const std::int64_t seg_end = seg_begin + len;
    std::int64_t cursor = std::max(seg_begin, contiguous_);
    if (cursor >= seg_end) {
        return;
    }
    const std::int64_t new_begin = cursor;

    // Subtract already-seen islands from [cursor, seg_end).
    for (const auto& [lo, hi] : islands_) {
        if (hi <= cursor) {
            continue;
        }
        if (lo >= seg_end) {
            break;
        }
        if (lo > cursor) {
            fresh.emplace_back(static_cast<std::uint32_t>(cursor - seg_begin), static_cast<std::uint32_t>(lo - seg_begin));
        }
        cursor = std::max(cursor, hi);
    }
    if (cursor < seg_end) {
        fresh.emplace_back(static_cast<std::uint32_t>(cursor - seg_begin), static_cast<std::uint32_t>(seg_end - seg_begin));
    }

    // Insert [new_begin, seg_end) and coalesce.
    auto pos = std::lower_bound(islands_.begin(), islands_.end(), std::make_pair(new_begin, seg_end));
    islands_.insert(pos, {new_begin, seg_end});
    std::vector<std::pair<std::int64_t, std::int64_t>> merged;
    merged.reserve(islands_.size());
    for (const auto& r : islands_) {
        if (!merged.empty() && r.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, r.second);
        } else {
            merged.push_back(r);
        }
    }
    islands_ = std::move(merged);

    while (!islands_.empty() && islands_.front().first <= contiguous_) {
        contiguous_ = std::max(contiguous_, islands_.front().second);
        islands_.erase(islands_.begin());
    }
    // Bounded memory: give up on the oldest hole if too many accumulate.
    while (islands_.size() > kMaxIslands) {
        contiguous_ = islands_.front().second;
        islands_.erase(islands_.begin());
    }
}

FlowRecord finalize(const FlowState& state, Termination how, const FlowConfig& config) {
    FlowRecord r;
    r.dataset_id = config.dataset_id;
    r.label = config.label;
    r.src_addr = state.initiator.addr;
    r.src_port = state.initiator.port;
    r.dst_addr = state.responder.addr;
    r.dst_port = state.responder.port;
    r.protocol = state.key.protocol;
    const ServiceMap& services = config.services ? *config.services : ServiceMap::defaults();
    r.service = resolve_service(r.src_port, r.dst_port, r.protocol, services).name;
    r.first_ts = state.first_ts;
    r.last_ts = state.last_ts;
    r.out = summarize(state.out, config.estimator);
    r.in = summarize(state.in, config.estimator);
    r.termination = how;
    r.truncated = state.truncated;
    return r;
}

FlowTable::FlowTable(FlowConfig config) : config_(std::move(config)) {
    if (!config_.services) {
        config_.services = std::make_shared<const ServiceMap>(ServiceMap::defaults());
    }
}

std::vector<FlowRecord> FlowTable::ingest(const PacketView& pkt) {
    std::vector<FlowRecord> done;
    ingest(pkt, done);
    return done;
}

void FlowTable::ingest(const PacketView& pkt, std::vector<FlowRecord>& done) {
    ++packets_;
    expire_idle(pkt.ts, done);

    const FlowKey key = FlowKey::of(pkt);
    auto it = flows_.find(key);
    if (it == flows_.end()) {
        it = create(key, pkt);
    } else {
        auto& lru = lru_for(key.protocol);
        lru.splice(lru.end(), lru, it->second.lru);
    }

    if (auto term = update(it->second.state, pkt)) {
        done.push_back(finalize(it->second.state, *term, config_));
        erase(it);
    }
}

void FlowTable::expire_idle(Timestamp now, std::vector<FlowRecord>& done) {
    for (Transport t : {Transport::tcp, Transport::udp}) {
        auto& lru = lru_for(t);
        const std::int64_t timeout = timeout_for(t);
        while (!lru.empty()) {
            auto it = flows_.find(lru.front());
            if (now.ns - it->second.state.last_ts.ns <= timeout) {
                break;
            }
            done.push_back(finalize(it->second.state, Termination::timeout, config_));
            erase(it);
        }
    }
}

FlowTable::Map::iterator FlowTable::create(const FlowKey& key, const PacketView& pkt) {
    Entry e;
    FlowState& st = e.state;
    st.key = key;
    const Endpoint src{pkt.src_addr, pkt.src_port};
    const Endpoint dst{pkt.dst_addr, pkt.dst_port};
    // A SYN-ACK as the first packet means we missed the SYN; its receiver opened the flow.
    const bool syn_ack = pkt.has_flag(tcp_flag::syn) && pkt.has_flag(tcp_flag::ack);
    st.initiator = syn_ack ? dst : src;
    st.responder = syn_ack ? src : dst;
    st.first_ts = pkt.ts;
    st.last_ts = pkt.ts;

    auto& lru = lru_for(key.protocol);
    lru.push_back(key);
    e.lru = std::prev(lru.end());
    auto [it, inserted] = flows_.emplace(key, std::move(e));
    peak_ = std::max(peak_, flows_.size());
    return it;
}

void FlowTable::erase(Map::iterator it) {
    lru_for(it->first.protocol).erase(it->second.lru);
    flows_.erase(it);
}

void FlowTable::accept_payload(DirectionStats& dir, const PacketView& pkt) {
    const std::span<const std::uint8_t> captured = pkt.payload;
    SymbolHistogram packet_hist;

    if (pkt.protocol == Transport::tcp && pkt.tcp_seq) {
        fresh_.clear();
        // Data on a SYN starts one past the SYN's sequence number.
        const std::uint32_t first = *pkt.tcp_seq + (pkt.has_flag(tcp_flag::syn) ? 1u : 0u);
        dir.seq.accept(first, pkt.wire_payload_len, fresh_);
        for (const auto& [lo, hi] : fresh_) {
            const std::size_t b = std::min<std::size_t>(lo, captured.size());
            const std::size_t e = std::min<std::size_t>(hi, captured.size());
            packet_hist.update(captured.subspan(b, e - b));
        }
    } else {
        packet_hist.update(captured);
    }

    if (packet_hist.empty()) {
        return;
    }
    dir.hist.merge(packet_hist);
    dir.payload_bytes += packet_hist.total();
    accepted_bytes_ += packet_hist.total();
    ++dir.payload_packets;
    dir.cum_entropy_last = entropy(dir.hist, config_.estimator);
    dir.lifecycle.add(dir.cum_entropy_last);
    dir.per_packet.add(entropy(packet_hist, config_.estimator));
}

std::optional<Termination> FlowTable::update(FlowState& st, const PacketView& pkt) {
    const Endpoint src{pkt.src_addr, pkt.src_port};
    const bool outbound = src == st.initiator;
    DirectionStats& dir = outbound ? st.out : st.in;
    DirectionStats& peer = outbound ? st.in : st.out;

    st.last_ts = std::max(st.last_ts, pkt.ts);
    st.truncated = st.truncated || pkt.truncated();
    ++dir.packets;

    if (pkt.protocol != Transport::tcp) {
        accept_payload(dir, pkt);
        return std::nullopt;
    }

    const bool syn = pkt.has_flag(tcp_flag::syn);
    if (syn && pkt.tcp_seq && !dir.seq.initialized()) {
        dir.seq.start(*pkt.tcp_seq + 1);
    }
    accept_payload(dir, pkt);

    if (pkt.has_flag(tcp_flag::rst)) {
        st.tcp_phase = TcpPhase::closed;
        return Termination::rst;
    }
    if (pkt.has_flag(tcp_flag::ack) && pkt.tcp_ack) {
        if (!dir.last_ack || seq_geq(*pkt.tcp_ack, *dir.last_ack)) {
            dir.last_ack = pkt.tcp_ack;
        }
    }
    if (pkt.has_flag(tcp_flag::fin) && pkt.tcp_seq) {
        const std::uint32_t end = *pkt.tcp_seq + pkt.wire_payload_len + (syn ? 1u : 0u) + 1u;
        if (!dir.fin_end || seq_geq(end, *dir.fin_end)) {
            dir.fin_end = end;
        }
        st.tcp_phase = TcpPhase::fin_wait;
    } else if (st.tcp_phase == TcpPhase::fresh && (!syn || pkt.has_flag(tcp_flag::ack))) {
        st.tcp_phase = TcpPhase::established;
    }

    const auto acked = [](const DirectionStats& sender, const DirectionStats& receiver) {
        return sender.fin_end && receiver.last_ack && seq_geq(*receiver.last_ack, *sender.fin_end);
    };
    if (acked(dir, peer) && acked(peer, dir)) {
        st.tcp_phase = TcpPhase::closed;
        return Termination::fin;
    }
    return std::nullopt;
}

std::vector<FlowRecord> FlowTable::flush() {
    std::vector<FlowRecord> out;
    out.reserve(flows_.size());
    for (const auto& [key, entry] : flows_) {
        out.push_back(finalize(entry.state, Termination::capture_end, config_));
    }
    flows_.clear();
    tcp_lru_.clear();
    udp_lru_.clear();
    std::sort(out.begin(), out.end(), [](const FlowRecord& a, const FlowRecord& b) {
        return std::tie(a.first_ts, a.src_addr, a.src_port, a.dst_addr, a.dst_port, a.protocol) <
               std::tie(b.first_ts, b.src_addr, b.src_port, b.dst_addr, b.dst_port, b.protocol);
    });
    return out;
}

}  // namespace flowent
