#include "flowent/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowent {
namespace {

constexpr double kMaxBits = 8.0;

std::uint64_t weight_of(const DirectionSummary& d, WeightMode mode) {
    if (d.packets == 0) {
        return 0;
    }
    return mode == WeightMode::packets ? d.packets : 1;
}

std::uint16_t service_port(const FlowRecord& r, const std::string& service, const ServiceMap& map) {
    const ServiceResolution res = resolve_service(r, map);
    if (res.name == service) {
        return res.port;
    }
    if (auto p = map.port_of(service)) {
        return *p;
    }
    if (auto p = parse_unmapped_service_name(service)) {
        return *p;
    }
    return r.dst_port;
}

double bits(double v) {
    return std::clamp(v, 0.0, kMaxBits);
}

}  // namespace

ServiceResolution resolve_service(const FlowRecord& record, const ServiceMap& map) {
    return resolve_service(record.src_port, record.dst_port, record.protocol, map);
}

void WeightedMoments::add(double x, std::uint64_t weight) {
    if (weight == 0) {
        return;
    }
    n += weight;
    const double w = static_cast<double>(weight);
    const double delta = x - mean;
    mean += delta * w / static_cast<double>(n);
    m2 += w * delta * (x - mean);
}

void WeightedMoments::merge(const WeightedMoments& other) {
    if (other.n == 0) {
        return;
    }
    if (n == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(other.n);
    const double total = na + nb;
    const double delta = other.mean - mean;
    mean += delta * nb / total;
    m2 += other.m2 + delta * delta * na * nb / total;
    n += other.n;
}

double WeightedMoments::stddev() const noexcept {
    return std::sqrt(std::max(0.0, variance()));
}

std::string_view to_string(WeightMode m) {
    return m == WeightMode::flows ? "flows" : "packets";
}

WeightMode parse_weight_mode(std::string_view s) {
    if (s == "packets") return WeightMode::packets;
    if (s == "flows") return WeightMode::flows;
    throw std::invalid_argument("weight mode must be packets or flows, got '" + std::string(s) + "'");
}

bool is_excluded(std::string_view label, const SummaryOptions& options) {
    while (!label.empty()) {
        const auto semi = label.find(';');
        const std::string_view token = label.substr(0, semi);
        if (!token.empty()) {
            if (options.exclude_labels.contains(token)) {
                return true;
            }
            if (options.benign_label && token != *options.benign_label) {
                return true;
            }
        }
        if (semi == std::string_view::npos) {
            break;
        }
        label.remove_prefix(semi + 1);
    }
    return false;
}

DatasetSummary summarize_dataset(std::span<const FlowRecord> records, const std::string& dataset_id,
                                 const SummaryOptions& options) {
    const ServiceMap& map = options.services ? *options.services : ServiceMap::defaults();
    DatasetSummary s;
    s.dataset_id = dataset_id;
    for (const FlowRecord& r : records) {
        if (r.dataset_id != dataset_id) {
            throw std::invalid_argument("record from dataset '" + r.dataset_id + "' passed to summary of '" +
                                        dataset_id + "'");
        }
        if (is_excluded(r.label, options)) {
            ++s.excluded;
            continue;
        }
        ++s.included;
        const std::string service = r.service.empty() ? resolve_service(r, map).name : r.service;
        auto [it, fresh] = s.services.try_emplace(service);
        if (fresh) {
            it->second.port = service_port(r, service, map);
        }
        it->second.out.add(r.out.final_entropy, weight_of(r.out, options.weight));
        it->second.in.add(r.in.final_entropy, weight_of(r.in, options.weight));
    }
    return s;
}

std::vector<DatasetSummary> summarize_all(std::span<const FlowRecord> records, const SummaryOptions& options) {
    std::map<std::string, std::vector<FlowRecord>> groups;
    for (const FlowRecord& r : records) {
        groups[r.dataset_id].push_back(r);
    }
    std::vector<DatasetSummary> out;
    out.reserve(groups.size());
    for (const auto& [id, group] : groups) {
        out.push_back(summarize_dataset(group, id, options));
    }
    return out;
}

std::vector<BaselineRow> combine(std::span<const DatasetSummary> summaries, const CombineOptions& options) {
    std::vector<const DatasetSummary*> ordered;
    ordered.reserve(summaries.size());
    for (const auto& s : summaries) {
        ordered.push_back(&s);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const DatasetSummary* a, const DatasetSummary* b) { return a->dataset_id < b->dataset_id; });

    std::map<std::string, ServiceSummary> pooled;
    for (const DatasetSummary* ds : ordered) {
        for (const auto& [name, svc] : ds->services) {
            auto [it, fresh] = pooled.try_emplace(name, ServiceSummary{svc.port, {}, {}});
            if (!fresh) {
                it->second.port = std::min(it->second.port, svc.port);
            }
            it->second.out.merge(svc.out);
            it->second.in.merge(svc.in);
        }
    }

    std::vector<BaselineRow> rows;
    for (const auto& [name, svc] : pooled) {
        const std::uint64_t samples = svc.out.n + svc.in.n;
        if (samples == 0 || samples < options.min_samples) {
            continue;
        }
        BaselineRow row;
        row.service = name;
        row.port = svc.port;
        row.mean_out = svc.out.n ? bits(svc.out.mean) : 0.0;
        row.mean_in = svc.in.n ? bits(svc.in.mean) : 0.0;
        row.std_out = bits(svc.out.stddev());
        row.std_in = bits(svc.in.stddev());
        row.mean_2way = (row.mean_out + row.mean_in) / 2;
        row.std_2way = (row.std_out + row.std_in) / 2;
        row.samples = samples;
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const BaselineRow& a, const BaselineRow& b) {
        if (a.mean_2way != b.mean_2way) {
            return a.mean_2way > b.mean_2way;
        }
        return a.service < b.service;
    });
    return rows;
}

}  // namespace flowent
