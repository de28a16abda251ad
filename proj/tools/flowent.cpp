// flowent: flow reconstruction, per-service entropy baselines and deviation
// scoring from classic pcap captures.

#include "flowent/anomaly.hpp"
#include "flowent/baseline.hpp"
#include "flowent/decode.hpp"
#include "flowent/file_entropy.hpp"
#include "flowent/flow_table.hpp"
#include "flowent/kernels.hpp"
#include "flowent/pcap.hpp"
#include "flowent/record_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace flowent;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string output;
    std::string format = "csv";
    std::string service_map;
    std::string kernels = "auto";
};

struct FlowsOpts {
    std::vector<std::string> inputs;
    double tcp_timeout = 300.0;
    double udp_timeout = 120.0;
    std::string estimator = "mle";
    std::vector<std::string> dataset_ids;
    std::string label;
};

struct BaselineOpts {
    std::vector<std::string> inputs;
    std::string weight = "packets";
    std::uint64_t min_samples = 20;
    std::vector<std::string> exclude_labels;
    std::string benign_label;
};

struct ScoreOpts {
    std::vector<std::string> inputs;
    std::string baseline;
    double k = 3.0;
    std::uint64_t min_payload = 64;
    std::string reference = "two-way";
};

struct EntropyOpts {
    std::vector<std::string> inputs;
    std::string variant = "mle";
    std::size_t chunk_size = kDefaultChunkBytes;
};

void diag(const std::string& msg) {
    std::cerr << "flowent: " << msg << '\n';
}

/// Owns the output stream: the named file, or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
            if (!*file_) {
                throw std::runtime_error(path + ": cannot open for writing");
            }
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::shared_ptr<const ServiceMap> load_services(const std::string& path) {
    if (path.empty()) {
        return std::make_shared<const ServiceMap>(ServiceMap::defaults());
    }
    return std::make_shared<const ServiceMap>(ServiceMap::load(path));
}

bool is_capture(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".pcap" || ext == ".cap";
}

// Directories expand to their capture files in name order; plain paths pass
// through so that a missing file is reported when it is opened.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        const fs::path p(in);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file() && is_capture(entry.path())) {
                    found.push_back(entry.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

std::int64_t seconds_to_ns(double s, const char* flag) {
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw UsageError(std::string(flag) + " must be a positive number of seconds");
    }
    return static_cast<std::int64_t>(std::llround(s * 1e9));
}

bool record_before(const FlowRecord& a, const FlowRecord& b) {
    return std::tie(a.first_ts, a.src_addr, a.src_port, a.dst_addr, a.dst_port, a.protocol) <
           std::tie(b.first_ts, b.src_addr, b.src_port, b.dst_addr, b.dst_port, b.protocol);
}

struct CaptureTotals {
    std::uint64_t packets = 0;
    std::uint64_t flows = 0;
    std::uint64_t truncated_records = 0;
    DecodeStats decode;
};

void print_verdicts(std::ostream& os, const DecodeStats& stats) {
    os << stats.non_flow() << " non-flow";
    bool first = true;
    for (std::size_t i = 0; i < kVerdictCount; ++i) {
        const auto v = static_cast<Verdict>(i);
        if (v == Verdict::flow || stats.by_verdict[i] == 0) {
            continue;
        }
        os << (first ? " (" : ", ") << to_string(v) << ' ' << stats.by_verdict[i];
        first = false;
    }
    if (!first) {
        os << ')';
    }
}

// Returns false if the capture could not be read to the end. Flows seen
// before the failure are still written.
bool process_capture(const fs::path& path, const FlowConfig& config, FlowWriter& writer, CaptureTotals& totals) {
    FlowTable table(config);
    DecodeStats stats;
    std::vector<FlowRecord> records;
    std::uint64_t truncated_records = 0;
    bool ok = true;
    try {
        auto reader = pcap::Reader::open(path);
        const auto link = static_cast<std::uint32_t>(reader.link_type());
        while (auto rec = reader.next()) {
            const DecodeResult res = decode_packet(rec->data, link, rec->ts);
            stats.record(res.verdict);
            if (!res.ok()) {
                continue;
            }
            if (res.view.truncated()) {
                ++stats.truncated_payloads;
            }
            table.ingest(res.view, records);
        }
        truncated_records = reader.truncated_records();
    } catch (const std::exception& e) {
        diag(path.string() + ": " + e.what());
        ok = false;
    }
    auto rest = table.flush();
    records.insert(records.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    std::sort(records.begin(), records.end(), record_before);
    for (const auto& r : records) {
        writer.write(r);
    }

    std::cerr << path.string() << ": " << stats.total() << " packets, ";
    print_verdicts(std::cerr, stats);
    std::cerr << ", " << records.size() << " flows, " << truncated_records << " truncated records, "
              << stats.truncated_payloads << " truncated payloads\n";

    totals.packets += stats.total();
    totals.flows += records.size();
    totals.truncated_records += truncated_records;
    totals.decode.truncated_payloads += stats.truncated_payloads;
    for (std::size_t i = 0; i < kVerdictCount; ++i) {
        totals.decode.by_verdict[i] += stats.by_verdict[i];
    }
    return ok;
}

int cmd_flows(const Common& common, const FlowsOpts& opts) {
    FlowConfig base;
    base.tcp_timeout_ns = seconds_to_ns(opts.tcp_timeout, "--tcp-timeout");
    base.udp_timeout_ns = seconds_to_ns(opts.udp_timeout, "--udp-timeout");
    base.estimator = parse_estimator(opts.estimator);
    base.label = opts.label;
    const Format format = parse_format(common.format);

    const auto inputs = expand_inputs(opts.inputs);
    if (!opts.dataset_ids.empty() && opts.dataset_ids.size() != 1 && opts.dataset_ids.size() != inputs.size()) {
        throw UsageError("--dataset-id given " + std::to_string(opts.dataset_ids.size()) + " times for " +
                         std::to_string(inputs.size()) + " inputs");
    }
    base.services = load_services(common.service_map);

    Output out(common.output);
    FlowWriter writer(out.stream(), format);
    CaptureTotals totals;
    int rc = kExitOk;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        FlowConfig config = base;
        if (opts.dataset_ids.empty()) {
            config.dataset_id = inputs[i].stem().string();
        } else {
            config.dataset_id = opts.dataset_ids.size() == 1 ? opts.dataset_ids[0] : opts.dataset_ids[i];
        }
        if (!process_capture(inputs[i], config, writer, totals)) {
            rc = kExitInput;
        }
    }
    writer.finish();

    std::cerr << "total: " << totals.packets << " packets read, ";
    print_verdicts(std::cerr, totals.decode);
    std::cerr << ", " << totals.flows << " flows emitted, " << totals.truncated_records << " truncated records, "
              << totals.decode.truncated_payloads << " truncated payloads\n";
    return rc;
}

// Reads every flow CSV; returns false if any input failed.
bool read_flow_inputs(const std::vector<std::string>& inputs, std::vector<FlowRecord>& records) {
    bool ok = true;
    for (const auto& path : inputs) {
        try {
            std::vector<FlowRecord> got;
            if (path == "-") {
                got = read_flows_csv(std::cin, "<stdin>");
            } else {
                std::ifstream in(path, std::ios::binary);
                if (!in) {
                    throw std::runtime_error(path + ": cannot open");
                }
                got = read_flows_csv(in, path);
            }
            records.insert(records.end(), std::make_move_iterator(got.begin()), std::make_move_iterator(got.end()));
        } catch (const std::exception& e) {
            diag(e.what());
            ok = false;
        }
    }
    return ok;
}

int cmd_baseline(const Common& common, const BaselineOpts& opts) {
    SummaryOptions sopts;
    sopts.weight = parse_weight_mode(opts.weight);
    sopts.exclude_labels.insert(opts.exclude_labels.begin(), opts.exclude_labels.end());
    if (!opts.benign_label.empty()) {
        sopts.benign_label = opts.benign_label;
    }
    sopts.services = load_services(common.service_map);
    const Format format = parse_format(common.format);

    std::vector<FlowRecord> records;
    if (!read_flow_inputs(opts.inputs, records)) {
        return kExitInput;
    }
    const auto summaries = summarize_all(records, sopts);
    std::uint64_t included = 0;
    std::uint64_t excluded = 0;
    for (const auto& s : summaries) {
        included += s.included;
        excluded += s.excluded;
    }
    const auto rows = combine(summaries, CombineOptions{opts.min_samples});

    Output out(common.output);
    write_baseline(out.stream(), rows, format);
    std::cerr << "baseline: " << summaries.size() << " datasets, " << included << " flows used, " << excluded
              << " excluded, " << rows.size() << " services\n";
    return kExitOk;
}

int cmd_score(const Common& common, const ScoreOpts& opts) {
    ScoreOptions sopts;
    sopts.k = opts.k;
    if (!(sopts.k > 0.0)) {
        throw UsageError("-k must be positive");
    }
    sopts.min_payload = opts.min_payload;
    sopts.reference = parse_baseline_reference(opts.reference);
    const Format format = parse_format(common.format);

    std::vector<BaselineRow> rows;
    try {
        std::ifstream in(opts.baseline, std::ios::binary);
        if (!in) {
            throw std::runtime_error(opts.baseline + ": cannot open");
        }
        rows = read_baseline_csv(in, opts.baseline);
    } catch (const std::exception& e) {
        diag(e.what());
        return kExitInput;
    }
    const BaselineTable table(rows);

    std::vector<FlowRecord> records;
    if (!read_flow_inputs(opts.inputs, records)) {
        return kExitInput;
    }
    std::vector<DeviationReport> reports;
    reports.reserve(records.size());
    std::uint64_t anomalies = 0;
    std::uint64_t unbaselined = 0;
    for (const auto& r : records) {
        reports.push_back(score(r, table, sopts));
        const auto v = reports.back().verdict;
        anomalies += v == DeviationVerdict::high_entropy_anomaly || v == DeviationVerdict::low_entropy_anomaly;
        unbaselined += v == DeviationVerdict::no_baseline;
    }

    Output out(common.output);
    write_reports(out.stream(), reports, format);
    std::cerr << "score: " << reports.size() << " flows, " << anomalies << " anomalous, " << unbaselined
              << " without baseline\n";
    return kExitOk;
}

int cmd_entropy(const Common& common, const EntropyOpts& opts) {
    const Estimator variant = parse_estimator(opts.variant);
    if (opts.chunk_size == 0) {
        throw UsageError("--chunk-size must be positive");
    }
    const Format format = parse_format(common.format);

    std::vector<FileEntropyRow> rows;
    int rc = kExitOk;
    for (const auto& path : opts.inputs) {
        try {
            if (path == "-") {
                rows.push_back({path, stream_entropy(std::cin, variant, opts.chunk_size)});
            } else {
                rows.push_back({path, file_entropy(path, variant, opts.chunk_size)});
            }
        } catch (const std::exception& e) {
            diag(e.what());
            rc = kExitInput;
        }
    }
    Output out(common.output);
    write_file_entropy(out.stream(), rows, format);
    return rc;
}

void add_common(CLI::App* cmd, Common& common, bool with_services) {
    cmd->add_option("-o,--output", common.output, "Output file (default: stdout)");
    cmd->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    if (with_services) {
        cmd->add_option("--service-map", common.service_map, "port,protocol,service CSV replacing the built-in map")
            ->check(CLI::ExistingFile);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow payload entropy: flow extraction, service baselines and deviation scoring"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--kernels", common.kernels, "Entropy kernels to use")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    FlowsOpts flows;
    auto* flows_cmd = app.add_subcommand("flows", "Reconstruct flows from pcap files and write one record per flow");
    flows_cmd->add_option("inputs", flows.inputs, "pcap files or directories")->required();
    flows_cmd->add_option("--tcp-timeout", flows.tcp_timeout, "TCP idle timeout in seconds")
        ->capture_default_str();
    flows_cmd->add_option("--udp-timeout", flows.udp_timeout, "UDP idle timeout in seconds")
        ->capture_default_str();
    flows_cmd->add_option("--estimator", flows.estimator, "Entropy estimator")
        ->check(CLI::IsMember({"mle", "kt"}))
        ->capture_default_str();
    flows_cmd->add_option("--dataset-id", flows.dataset_ids,
                          "Dataset id: once for all inputs, or once per input (default: file stem)")
        ->allow_extra_args(false);
    flows_cmd->add_option("--label", flows.label, "Label written to every record");
    add_common(flows_cmd, common, true);

    BaselineOpts baseline;
    auto* baseline_cmd = app.add_subcommand("baseline", "Build per-service entropy baselines from flow CSVs");
    baseline_cmd->add_option("inputs", baseline.inputs, "flow CSV files ('-' for stdin)")->required();
    baseline_cmd->add_option("--weight", baseline.weight, "Per-flow weight")
        ->check(CLI::IsMember({"packets", "flows"}))
        ->capture_default_str();
    baseline_cmd->add_option("--min-samples", baseline.min_samples, "Drop services with fewer samples")
        ->capture_default_str();
    baseline_cmd->add_option("--exclude-label", baseline.exclude_labels, "Skip records carrying this label")
        ->allow_extra_args(false);
    baseline_cmd->add_option("--benign-label", baseline.benign_label,
                             "Skip records carrying any label other than this one");
    add_common(baseline_cmd, common, true);

    ScoreOpts score_opts;
    auto* score_cmd = app.add_subcommand("score", "Score flows against a baseline");
    score_cmd->add_option("inputs", score_opts.inputs, "flow CSV files ('-' for stdin)")->required();
    score_cmd->add_option("--baseline", score_opts.baseline, "Baseline CSV")->required();
    score_cmd->add_option("-k", score_opts.k, "z-score threshold")->capture_default_str();
    score_cmd->add_option("--min-payload", score_opts.min_payload, "Minimum payload bytes to score a direction")
        ->capture_default_str();
    score_cmd->add_option("--reference", score_opts.reference, "Baseline statistics to compare against")
        ->check(CLI::IsMember({"two-way", "directional"}))
        ->capture_default_str();
    add_common(score_cmd, common, false);

    EntropyOpts ent;
    auto* ent_cmd = app.add_subcommand("entropy", "Byte entropy of whole files");
    ent_cmd->add_option("inputs", ent.inputs, "files ('-' for stdin)")->required();
    ent_cmd->add_option("--variant", ent.variant, "Entropy estimator")
        ->check(CLI::IsMember({"mle", "kt"}))
        ->capture_default_str();
    ent_cmd->add_option("--chunk-size", ent.chunk_size, "Read size in bytes")->capture_default_str();
    add_common(ent_cmd, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    // "auto" leaves the startup choice alone so FLOWENT_KERNELS still applies.
    if (common.kernels != "auto" && !kernels::select(common.kernels)) {
        diag("kernels '" + common.kernels + "' are not available on this machine");
        return kExitUsage;
    }

    try {
        if (*flows_cmd) return cmd_flows(common, flows);
        if (*baseline_cmd) return cmd_baseline(common, baseline);
        if (*score_cmd) return cmd_score(common, score_opts);
        if (*ent_cmd) return cmd_entropy(common, ent);
    } catch (const UsageError& e) {
        diag(e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        diag(e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        diag(e.what());
        return kExitInput;
    }
    return kExitUsage;
}
