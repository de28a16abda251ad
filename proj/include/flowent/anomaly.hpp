#pragma once

// Flow scoring against per-service baselines.

#include "flowent/baseline.hpp"
#include "flowent/flow_record.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace flowent {

enum class DeviationVerdict : std::uint8_t { normal, high_entropy_anomaly, low_entropy_anomaly, no_baseline };

std::string_view to_string(DeviationVerdict v);

// Which baseline statistics a direction is compared against.
enum class BaselineReference : std::uint8_t {
    two_way,      // mean_2way / std_2way for both directions
    directional,  // mean_out/std_out for outbound, mean_in/std_in for inbound
};

std::string_view to_string(BaselineReference r);
BaselineReference parse_baseline_reference(std::string_view s);

struct ScoreOptions {
    double k = 3.0;                   // |z| threshold, must be > 0
    std::uint64_t min_payload = 64;   // directions with fewer payload bytes are not scored
    double zero_std_band = 0.5;       // absolute bits/byte band when the baseline std is 0
    BaselineReference reference = BaselineReference::two_way;
};

struct DirectionScore {
    bool scored = false;  // payload_bytes >= min_payload
    double observed = 0.0;
    std::uint64_t payload_bytes = 0;
    double baseline_mean = 0.0;
    double baseline_std = 0.0;
    std::optional<double> z;  // absent when unscored, without baseline, or std == 0
    DeviationVerdict verdict = DeviationVerdict::normal;
};

struct DeviationReport {
    std::string dataset_id;
    IpAddress src_addr;
    std::uint16_t src_port = 0;
    IpAddress dst_addr;
    std::uint16_t dst_port = 0;
    Transport protocol = Transport::tcp;
    std::string service;
    Timestamp first_ts;
    DirectionScore out;
    DirectionScore in;
    DeviationVerdict verdict = DeviationVerdict::normal;
    double threshold = 3.0;
};

/// Baseline rows keyed by service name.
class BaselineTable {
public:
    BaselineTable() = default;
    explicit BaselineTable(std::span<const BaselineRow> rows);

    void insert(BaselineRow row);
    const BaselineRow* find(std::string_view service) const;
    std::size_t size() const noexcept { return rows_.size(); }

private:
    std::map<std::string, BaselineRow, std::less<>> rows_;
};

// Scores one observation against (mean, std_dev); have_baseline=false yields no_baseline.
DirectionScore score_direction(double observed, std::uint64_t payload_bytes, double mean, double std_dev,
                               bool have_baseline, const ScoreOptions& options);

// Throws std::invalid_argument if options.k <= 0.
DeviationReport score(const FlowRecord& record, const BaselineTable& baseline, const ScoreOptions& options = {});

}  // namespace flowent
