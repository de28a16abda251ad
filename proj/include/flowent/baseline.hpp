#pragma once

// Per-service entropy baselines: per-dataset summaries combined with
// sample-size weighting.

#include "flowent/flow_record.hpp"
#include "flowent/service_map.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace flowent {

ServiceResolution resolve_service(const FlowRecord& record, const ServiceMap& map);

/// Weighted streaming moments. `n` is the total integer weight; the variance
/// is the weighted population variance.
struct WeightedMoments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x, std::uint64_t weight);
    void merge(const WeightedMoments& other);
    double variance() const noexcept { return n == 0 ? 0.0 : m2 / static_cast<double>(n); }
    double stddev() const noexcept;
};

enum class WeightMode : std::uint8_t { packets, flows };

std::string_view to_string(WeightMode m);
WeightMode parse_weight_mode(std::string_view s);

struct ServiceSummary {
    std::uint16_t port = 0;
    WeightedMoments out;
    WeightedMoments in;
};

struct DatasetSummary {
    std::string dataset_id;
    std::map<std::string, ServiceSummary> services;
    std::uint64_t included = 0;
    std::uint64_t excluded = 0;
};

struct SummaryOptions {
    WeightMode weight = WeightMode::packets;
    // A record is skipped if any of its ';'-separated labels is listed here...
    std::set<std::string, std::less<>> exclude_labels;
    // ...or, when set, if it carries any label other than this one.
    std::optional<std::string> benign_label;
    std::shared_ptr<const ServiceMap> services;  // defaults() when null
};

bool is_excluded(std::string_view label, const SummaryOptions& options);

// Throws std::invalid_argument if a record carries a different dataset_id.
DatasetSummary summarize_dataset(std::span<const FlowRecord> records, const std::string& dataset_id,
                                 const SummaryOptions& options = {});

// Groups records by dataset_id (sorted by id) and summarizes each group.
std::vector<DatasetSummary> summarize_all(std::span<const FlowRecord> records, const SummaryOptions& options = {});

struct BaselineRow {
    std::string service;
    std::uint16_t port = 0;
    double mean_2way = 0.0;
    double std_2way = 0.0;
    double mean_out = 0.0;
    double mean_in = 0.0;
    double std_out = 0.0;
    double std_in = 0.0;
    std::uint64_t samples = 0;

    friend bool operator==(const BaselineRow&, const BaselineRow&) = default;
};

struct CombineOptions {
    std::uint64_t min_samples = 20;
};

/// Pools every dataset per service and direction. Summaries are folded in
/// dataset_id order, so the result does not depend on input order. Rows are
/// returned sorted by mean_2way descending, then service name.
std::vector<BaselineRow> combine(std::span<const DatasetSummary> summaries, const CombineOptions& options = {});

}  // namespace flowent
