#include "flowent/anomaly.hpp"

#include <cmath>
#include <stdexcept>

namespace flowent {
namespace {

// Magnitude used to pick the dominant direction when both are anomalous.
double severity(const DirectionScore& d) {
    if (d.z) {
        return std::abs(*d.z);
    }
    return std::abs(d.observed - d.baseline_mean);
}

bool anomalous(DeviationVerdict v) {
    return v == DeviationVerdict::high_entropy_anomaly || v == DeviationVerdict::low_entropy_anomaly;
}

}  // namespace

std::string_view to_string(DeviationVerdict v) {
    switch (v) {
        case DeviationVerdict::normal: return "normal";
        case DeviationVerdict::high_entropy_anomaly: return "high_entropy_anomaly";
        case DeviationVerdict::low_entropy_anomaly: return "low_entropy_anomaly";
        case DeviationVerdict::no_baseline: return "no_baseline";
    }
    return "normal";
}

std::string_view to_string(BaselineReference r) {
    return r == BaselineReference::directional ? "directional" : "two-way";
}

BaselineReference parse_baseline_reference(std::string_view s) {
    if (s == "two-way" || s == "2way") return BaselineReference::two_way;
    if (s == "directional") return BaselineReference::directional;
    throw std::invalid_argument("baseline reference must be two-way or directional, got '" + std::string(s) + "'");
}

BaselineTable::BaselineTable(std::span<const BaselineRow> rows) {
    for (const auto& r : rows) {
        insert(r);
    }
}

void BaselineTable::insert(BaselineRow row) {
    std::string key = row.service;
    rows_.insert_or_assign(std::move(key), std::move(row));
}

const BaselineRow* BaselineTable::find(std::string_view service) const {
    auto it = rows_.find(service);
    return it == rows_.end() ? nullptr : &it->second;
}

DirectionScore score_direction(double observed, std::uint64_t payload_bytes, double mean, double std_dev,
                               bool have_baseline, const ScoreOptions& options) {
    DirectionScore d;
    d.observed = observed;
    d.payload_bytes = payload_bytes;
    d.scored = payload_bytes >= options.min_payload;
    if (!have_baseline) {
        d.verdict = DeviationVerdict::no_baseline;
        return d;
    }
    d.baseline_mean = mean;
    d.baseline_std = std_dev;
    if (!d.scored) {
        return d;
    }
    if (std_dev > 0.0) {
        const double z = (observed - mean) / std_dev;
        d.z = z;
        if (z > options.k) {
            d.verdict = DeviationVerdict::high_entropy_anomaly;
        } else if (z < -options.k) {
            d.verdict = DeviationVerdict::low_entropy_anomaly;
        }
    } else {
        const double dev = observed - mean;
        if (dev > options.zero_std_band) {
            d.verdict = DeviationVerdict::high_entropy_anomaly;
        } else if (dev < -options.zero_std_band) {
            d.verdict = DeviationVerdict::low_entropy_anomaly;
        }
    }
    return d;
}

DeviationReport score(const FlowRecord& record, const BaselineTable& baseline, const ScoreOptions& options) {
    if (!(options.k > 0.0)) {
        throw std::invalid_argument("threshold k must be positive");
    }
    DeviationReport rep;
    rep.dataset_id = record.dataset_id;
    rep.src_addr = record.src_addr;
    rep.src_port = record.src_port;
    rep.dst_addr = record.dst_addr;
    rep.dst_port = record.dst_port;
    rep.protocol = record.protocol;
    rep.service = record.service;
    rep.first_ts = record.first_ts;
    rep.threshold = options.k;

    const BaselineRow* row = baseline.find(record.service);
    const bool have = row != nullptr;
    const bool directional = options.reference == BaselineReference::directional;
    const auto stat = [&](double two_way, double dir) { return have ? (directional ? dir : two_way) : 0.0; };

    rep.out = score_direction(record.out.final_entropy, record.out.payload_bytes,
                              stat(row ? row->mean_2way : 0, row ? row->mean_out : 0),
                              stat(row ? row->std_2way : 0, row ? row->std_out : 0), have, options);
    rep.in = score_direction(record.in.final_entropy, record.in.payload_bytes,
                             stat(row ? row->mean_2way : 0, row ? row->mean_in : 0),
                             stat(row ? row->std_2way : 0, row ? row->std_in : 0), have, options);

    if (!have) {
        rep.verdict = DeviationVerdict::no_baseline;
    } else if (anomalous(rep.out.verdict) && anomalous(rep.in.verdict)) {
        rep.verdict = severity(rep.in) > severity(rep.out) ? rep.in.verdict : rep.out.verdict;
    } else if (anomalous(rep.out.verdict)) {
        rep.verdict = rep.out.verdict;
    } else if (anomalous(rep.in.verdict)) {
        rep.verdict = rep.in.verdict;
    } else {
        rep.verdict = DeviationVerdict::normal;
    }
    return rep;
}

}  // namespace flowent
