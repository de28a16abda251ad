#include "flowent/record_io.hpp"

#include "flowent/csv.hpp"

#include <json.hpp>

#include <istream>
#include <optional>
#include <ostream>
#include <unordered_map>

namespace flowent {
namespace {

using nlohmann::ordered_json;

std::string ns_to_seconds(std::int64_t ns) {
    return Timestamp{ns}.to_string();
}

std::string real(double v) {
    return csv::format_real(v, 6);
}

std::vector<std::string> flow_fields(const FlowRecord& r) {
    return {
        r.dataset_id,
        r.src_addr.to_string(),
        std::to_string(r.src_port),
        r.dst_addr.to_string(),
        std::to_string(r.dst_port),
        std::to_string(static_cast<int>(r.protocol)),
        r.service,
        r.first_ts.to_string(),
        r.last_ts.to_string(),
        ns_to_seconds(r.duration_ns()),
        std::to_string(r.out.packets),
        std::to_string(r.in.packets),
        std::to_string(r.out.payload_bytes),
        std::to_string(r.in.payload_bytes),
        real(r.out.final_entropy),
        real(r.in.final_entropy),
        real(r.out.lifecycle_std),
        real(r.in.lifecycle_std),
        real(r.out.mean_packet_entropy),
        real(r.in.mean_packet_entropy),
        real(r.out.std_packet_entropy),
        real(r.in.std_packet_entropy),
        std::string(to_string(r.termination)),
        r.truncated ? "1" : "0",
        r.label,
    };
}

ordered_json direction_json(const DirectionSummary& d) {
    return ordered_json{
        {"packets", d.packets},
        {"payload_bytes", d.payload_bytes},
        {"entropy", d.final_entropy},
        {"entropy_lifecycle_std", d.lifecycle_std},
        {"mean_pkt_entropy", d.mean_packet_entropy},
        {"std_pkt_entropy", d.std_packet_entropy},
    };
}

ordered_json flow_json(const FlowRecord& r) {
    return ordered_json{
        {"dataset_id", r.dataset_id},
        {"src_addr", r.src_addr.to_string()},
        {"src_port", r.src_port},
        {"dst_addr", r.dst_addr.to_string()},
        {"dst_port", r.dst_port},
        {"protocol", static_cast<int>(r.protocol)},
        {"service", r.service},
        {"first_ts", r.first_ts.to_string()},
        {"last_ts", r.last_ts.to_string()},
        {"duration", ns_to_seconds(r.duration_ns())},
        {"out", direction_json(r.out)},
        {"in", direction_json(r.in)},
        {"termination", to_string(r.termination)},
        {"truncated", r.truncated},
        {"label", r.label},
    };
}

/// Maps header names to positions and checks them against a schema.
class HeaderIndex {
public:
    HeaderIndex(const std::vector<std::string>& header, const std::vector<std::string>& schema,
                std::string_view origin) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            const std::string name(csv::trim(header[i]));
            bool known = false;
            for (const auto& s : schema) {
                known = known || s == name;
            }
            if (!known) {
                throw SchemaError(std::string(origin) + ": unexpected column '" + name + "'");
            }
            if (!pos_.emplace(name, i).second) {
                throw SchemaError(std::string(origin) + ": duplicate column '" + name + "'");
            }
        }
        for (const auto& s : schema) {
            if (!pos_.contains(s)) {
                throw SchemaError(std::string(origin) + ": missing column '" + s + "'");
            }
        }
        width_ = header.size();
    }

    std::size_t width() const { return width_; }
    std::size_t operator[](const std::string& name) const { return pos_.at(name); }

private:
    std::unordered_map<std::string, std::size_t> pos_;
    std::size_t width_ = 0;
};

/// Field accessor that turns parse failures into SchemaErrors naming the column.
class Row {
public:
    Row(const std::vector<std::string>& fields, const HeaderIndex& idx, std::string_view origin, std::size_t line)
        : fields_(fields), idx_(idx), origin_(origin), line_(line) {}

    const std::string& str(const std::string& col) const { return fields_[idx_[col]]; }

    template <typename F>
    auto parse(const std::string& col, F&& f) const {
        try {
            return f(std::string_view(str(col)));
        } catch (const std::exception& e) {
            throw SchemaError(std::string(origin_) + ":" + std::to_string(line_) + ": column '" + col +
                              "': " + e.what());
        }
    }

    double real(const std::string& col) const { return parse(col, csv::parse_real); }
    std::uint64_t uint(const std::string& col) const { return parse(col, csv::parse_uint); }
    std::uint16_t port(const std::string& col) const {
        return parse(col, [](std::string_view s) {
            const std::uint64_t v = csv::parse_uint(s);
            if (v > 65535) {
                throw std::invalid_argument("port out of range");
            }
            return static_cast<std::uint16_t>(v);
        });
    }
    IpAddress addr(const std::string& col) const {
        return parse(col, [](std::string_view s) {
            auto ip = IpAddress::parse(csv::trim(s));
            if (!ip) {
                throw std::invalid_argument("bad address '" + std::string(s) + "'");
            }
            return *ip;
        });
    }
    Timestamp ts(const std::string& col) const {
        return parse(col, [](std::string_view s) {
            auto t = Timestamp::parse(csv::trim(s));
            if (!t) {
                throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
            }
            return *t;
        });
    }

private:
    const std::vector<std::string>& fields_;
    const HeaderIndex& idx_;
    std::string_view origin_;
    std::size_t line_;
};

template <typename F>
void for_each_row(std::istream& in, const std::vector<std::string>& schema, std::string_view origin, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<HeaderIndex> idx;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split_line(line);
        if (!idx) {
            idx.emplace(fields, schema, origin);
            continue;
        }
        if (fields.size() != idx->width()) {
            throw SchemaError(std::string(origin) + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(idx->width()) + " fields, found " + std::to_string(fields.size()));
        }
        f(Row(fields, *idx, origin, lineno));
    }
    if (!idx) {
        throw SchemaError(std::string(origin) + ": missing header row");
    }
}

}  // namespace

Format parse_format(std::string_view s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw std::invalid_argument("format must be csv or json, got '" + std::string(s) + "'");
}

const std::vector<std::string>& flow_columns() {
    static const std::vector<std::string> cols = {
        "dataset_id", "src_addr", "src_port", "dst_addr", "dst_port", "protocol", "service",
        "first_ts", "last_ts", "duration", "pkts_out", "pkts_in", "bytes_out", "bytes_in",
        "entropy_out", "entropy_in", "entropy_lifecycle_std_out", "entropy_lifecycle_std_in",
        "mean_pkt_entropy_out", "mean_pkt_entropy_in", "std_pkt_entropy_out", "std_pkt_entropy_in",
        "termination", "truncated", "label",
    };
    return cols;
}

const std::vector<std::string>& baseline_columns() {
    static const std::vector<std::string> cols = {
        "service", "port", "mean_2way", "std_2way", "mean_out", "mean_in", "std_out", "std_in", "samples",
    };
    return cols;
}

const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {
        "dataset_id", "src_addr", "src_port", "dst_addr", "dst_port", "protocol", "service", "first_ts",
        "direction", "payload_bytes", "observed", "baseline_mean", "baseline_std", "z", "verdict", "threshold",
    };
    return cols;
}

FlowWriter::FlowWriter(std::ostream& out, Format format) : out_(out), format_(format) {
    if (format_ == Format::csv) {
        out_ << csv::join(flow_columns()) << '\n';
    } else {
        out_ << "[";
    }
}

FlowWriter::~FlowWriter() {
    if (!finished_) {
        try {
            finish();
        } catch (...) {
        }
    }
}

void FlowWriter::write(const FlowRecord& r) {
    if (format_ == Format::csv) {
        out_ << csv::join(flow_fields(r)) << '\n';
    } else {
        out_ << (count_ == 0 ? "\n" : ",\n") << flow_json(r).dump();
    }
    ++count_;
}

void FlowWriter::finish() {
    if (finished_) {
        return;
    }
    finished_ = true;
    if (format_ == Format::json) {
        out_ << (count_ == 0 ? "]\n" : "\n]\n");
    }
    out_.flush();
}

std::vector<FlowRecord> read_flows_csv(std::istream& in, std::string_view origin) {
    std::vector<FlowRecord> records;
    for_each_row(in, flow_columns(), origin, [&](const Row& row) {
        FlowRecord r;
        r.dataset_id = row.str("dataset_id");
        r.src_addr = row.addr("src_addr");
        r.src_port = row.port("src_port");
        r.dst_addr = row.addr("dst_addr");
        r.dst_port = row.port("dst_port");
        r.protocol = row.parse("protocol", [](std::string_view s) {
            const std::uint64_t p = csv::parse_uint(s);
            if (p != 6 && p != 17) {
                throw std::invalid_argument("protocol must be 6 or 17");
            }
            return static_cast<Transport>(p);
        });
        r.service = row.str("service");
        r.first_ts = row.ts("first_ts");
        r.last_ts = row.ts("last_ts");
        r.out.packets = row.uint("pkts_out");
        r.in.packets = row.uint("pkts_in");
        r.out.payload_bytes = row.uint("bytes_out");
        r.in.payload_bytes = row.uint("bytes_in");
        r.out.final_entropy = row.real("entropy_out");
        r.in.final_entropy = row.real("entropy_in");
        r.out.lifecycle_std = row.real("entropy_lifecycle_std_out");
        r.in.lifecycle_std = row.real("entropy_lifecycle_std_in");
        r.out.mean_packet_entropy = row.real("mean_pkt_entropy_out");
        r.in.mean_packet_entropy = row.real("mean_pkt_entropy_in");
        r.out.std_packet_entropy = row.real("std_pkt_entropy_out");
        r.in.std_packet_entropy = row.real("std_pkt_entropy_in");
        r.termination = row.parse("termination", [](std::string_view s) {
            auto t = parse_termination(csv::trim(s));
            if (!t) {
                throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
            }
            return *t;
        });
        r.truncated = row.parse("truncated", [](std::string_view s) {
            s = csv::trim(s);
            if (s == "1" || s == "true") return true;
            if (s == "0" || s == "false") return false;
            throw std::invalid_argument("expected 0 or 1");
        });
        r.label = row.str("label");
        records.push_back(std::move(r));
    });
    return records;
}

void write_baseline(std::ostream& out, std::span<const BaselineRow> rows, Format format) {
    if (format == Format::json) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) {
            arr.push_back(ordered_json{
                {"service", r.service}, {"port", r.port},
                {"mean_2way", r.mean_2way}, {"std_2way", r.std_2way},
                {"mean_out", r.mean_out}, {"mean_in", r.mean_in},
                {"std_out", r.std_out}, {"std_in", r.std_in},
                {"samples", r.samples},
            });
        }
        out << arr.dump(2) << '\n';
        return;
    }
    out << csv::join(baseline_columns()) << '\n';
    for (const auto& r : rows) {
        out << csv::join({r.service, std::to_string(r.port), real(r.mean_2way), real(r.std_2way), real(r.mean_out),
                          real(r.mean_in), real(r.std_out), real(r.std_in), std::to_string(r.samples)})
            << '\n';
    }
}

std::vector<BaselineRow> read_baseline_csv(std::istream& in, std::string_view origin) {
    std::vector<BaselineRow> rows;
    for_each_row(in, baseline_columns(), origin, [&](const Row& row) {
        BaselineRow r;
        r.service = row.str("service");
        r.port = row.port("port");
        r.mean_2way = row.real("mean_2way");
        r.std_2way = row.real("std_2way");
        r.mean_out = row.real("mean_out");
        r.mean_in = row.real("mean_in");
        r.std_out = row.real("std_out");
        r.std_in = row.real("std_in");
        r.samples = row.parse("samples", [](std::string_view s) {
            // Published tables use thousands separators.
            std::string digits;
            for (char c : s) {
                if (c != '_' && c != ' ') digits.push_back(c);
            }
            return csv::parse_uint(digits);
        });
        rows.push_back(std::move(r));
    });
    return rows;
}

void write_reports(std::ostream& out, std::span<const DeviationReport> reports, Format format) {
    const auto opt_real = [](const std::optional<double>& v) { return v ? real(*v) : std::string(); };
    if (format == Format::json) {
        const auto dir_json = [](const DirectionScore& d) {
            ordered_json j{
                {"scored", d.scored},
                {"payload_bytes", d.payload_bytes},
                {"observed", d.observed},
                {"verdict", to_string(d.verdict)},
            };
            if (d.verdict != DeviationVerdict::no_baseline) {
                j["baseline_mean"] = d.baseline_mean;
                j["baseline_std"] = d.baseline_std;
            }
            j["z"] = d.z ? ordered_json(*d.z) : ordered_json(nullptr);
            return j;
        };
        ordered_json arr = ordered_json::array();
        for (const auto& r : reports) {
            arr.push_back(ordered_json{
                {"dataset_id", r.dataset_id},
                {"src_addr", r.src_addr.to_string()},
                {"src_port", r.src_port},
                {"dst_addr", r.dst_addr.to_string()},
                {"dst_port", r.dst_port},
                {"protocol", static_cast<int>(r.protocol)},
                {"service", r.service},
                {"first_ts", r.first_ts.to_string()},
                {"out", dir_json(r.out)},
                {"in", dir_json(r.in)},
                {"verdict", to_string(r.verdict)},
                {"threshold", r.threshold},
            });
        }
        out << arr.dump(2) << '\n';
        return;
    }
    out << csv::join(report_columns()) << '\n';
    for (const auto& r : reports) {
        for (const auto& [name, d] : {std::pair<const char*, const DirectionScore&>{"out", r.out}, {"in", r.in}}) {
            if (!d.scored) {
                continue;
            }
            const bool have = d.verdict != DeviationVerdict::no_baseline;
            out << csv::join({
                       r.dataset_id, r.src_addr.to_string(), std::to_string(r.src_port), r.dst_addr.to_string(),
                       std::to_string(r.dst_port), std::to_string(static_cast<int>(r.protocol)), r.service,
                       r.first_ts.to_string(), name, std::to_string(d.payload_bytes), real(d.observed),
                       have ? real(d.baseline_mean) : std::string(), have ? real(d.baseline_std) : std::string(),
                       opt_real(d.z), std::string(to_string(d.verdict)), real(r.threshold),
                   })
                << '\n';
        }
    }
}

void write_file_entropy(std::ostream& out, std::span<const FileEntropyRow> rows, Format format) {
    if (format == Format::json) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) {
            arr.push_back(ordered_json{
                {"path", r.path},
                {"bytes", r.result.bytes},
                {"entropy", r.result.entropy},
                {"variant", to_string(r.result.variant)},
            });
        }
        out << arr.dump(2) << '\n';
        return;
    }
    out << "path,bytes,entropy,variant\n";
    for (const auto& r : rows) {
        out << csv::join({r.path, std::to_string(r.result.bytes), real(r.result.entropy),
                          std::string(to_string(r.result.variant))})
            << '\n';
    }
}

}  // namespace flowent
