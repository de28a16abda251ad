#pragma once

// CSV / JSON serialization for flow records, baselines, deviation reports and
// file-entropy rows.

#include "flowent/anomaly.hpp"
#include "flowent/baseline.hpp"
#include "flowent/file_entropy.hpp"
#include "flowent/flow_record.hpp"

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowent {

enum class Format : std::uint8_t { csv, json };

Format parse_format(std::string_view s);

/// Input does not match the expected column layout. what() names the column.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string>& flow_columns();
const std::vector<std::string>& baseline_columns();
const std::vector<std::string>& report_columns();

/// Streams records in either format. JSON output is a single array.
class FlowWriter {
public:
    FlowWriter(std::ostream& out, Format format);
    ~FlowWriter();
    FlowWriter(const FlowWriter&) = delete;
    FlowWriter& operator=(const FlowWriter&) = delete;

    void write(const FlowRecord& r);
    void finish();

private:
    std::ostream& out_;
    Format format_;
    std::size_t count_ = 0;
    bool finished_ = false;
};

std::vector<FlowRecord> read_flows_csv(std::istream& in, std::string_view origin = "<flows>");

void write_baseline(std::ostream& out, std::span<const BaselineRow> rows, Format format = Format::csv);
std::vector<BaselineRow> read_baseline_csv(std::istream& in, std::string_view origin = "<baseline>");

// CSV: one row per scored direction.
void write_reports(std::ostream& out, std::span<const DeviationReport> reports, Format format = Format::csv);

struct FileEntropyRow {
    std::string path;
    FileEntropy result;
};
void write_file_entropy(std::ostream& out, std::span<const FileEntropyRow> rows, Format format = Format::csv);

}  // namespace flowent
