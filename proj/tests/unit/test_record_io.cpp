#include "flowent/csv.hpp"
#include "flowent/record_io.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace flowent;

namespace {

FlowRecord sample_record(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> h(0.0, 8.0);
    FlowRecord r;
    r.dataset_id = "set,with \"quotes\"";
    r.src_addr = rng() % 2 ? IpAddress::v4(10, 1, 2, 3) : *IpAddress::parse("fe80::1");
    r.dst_addr = r.src_addr.family == IpAddress::Family::v4 ? IpAddress::v4(8, 8, 8, 8) : *IpAddress::parse("::2");
    r.src_port = static_cast<std::uint16_t>(rng());
    r.dst_port = static_cast<std::uint16_t>(rng());
    r.protocol = rng() % 2 ? Transport::tcp : Transport::udp;
    r.service = "svc";
    r.first_ts = Timestamp{static_cast<std::int64_t>(rng() % 2'000'000'000'000'000'000ULL)};
    r.last_ts = Timestamp{r.first_ts.ns + static_cast<std::int64_t>(rng() % 1'000'000'000'000)};
    for (DirectionSummary* d : {&r.out, &r.in}) {
        d->packets = rng() % 100000;
        d->payload_bytes = rng();
        d->final_entropy = h(rng);
        d->lifecycle_std = h(rng) / 8;
        d->mean_packet_entropy = h(rng);
        d->std_packet_entropy = h(rng) / 3;
    }
    r.termination = static_cast<Termination>(rng() % 4);
    r.truncated = rng() % 2;
    r.label = "benign";
    return r;
}

const std::string kReordered =
    "label,truncated,termination,std_pkt_entropy_in,std_pkt_entropy_out,mean_pkt_entropy_in,"
    "mean_pkt_entropy_out,entropy_lifecycle_std_in,entropy_lifecycle_std_out,entropy_in,entropy_out,bytes_in,"
    "bytes_out,pkts_in,pkts_out,duration,last_ts,first_ts,service,protocol,dst_port,dst_addr,src_port,"
    "src_addr,dataset_id\n"
    "x,0,fin,0,0,0,0,0,0,2.5,1.5,10,20,1,2,1.000000000,2.000000000,1.000000000,ssh,6,22,10.0.0.2,1234,"
    "10.0.0.1,d\n";

}  // namespace

TEST_SUITE("record_io") {

TEST_CASE("csv split and escape") {
    CHECK(csv::split_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(csv::split_line("\"x,y\",\"he said \"\"hi\"\"\"") == std::vector<std::string>{"x,y", "he said \"hi\""});
    CHECK(csv::split_line("a,b\r") == std::vector<std::string>{"a", "b"});
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("format_real round-trips with at least six decimals") {
    CHECK(csv::format_real(1.0) == "1.000000");
    CHECK(csv::format_real(0.0) == "0.000000");
    CHECK(csv::format_real(7.631) == "7.631000");
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> d(0.0, 8.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = d(rng);
        const std::string s = csv::format_real(v);
        CHECK(csv::parse_real(s) == v);
        CHECK(s.size() - s.find('.') - 1 >= 6);
    }
}

TEST_CASE("strict number parsing") {
    CHECK(csv::parse_uint("42") == 42);
    CHECK_THROWS_AS(csv::parse_uint("4x"), std::invalid_argument);
    CHECK_THROWS_AS(csv::parse_uint("-1"), std::invalid_argument);
    CHECK_THROWS_AS(csv::parse_uint(""), std::invalid_argument);
    CHECK(csv::parse_real("0.5") == 0.5);
    CHECK_THROWS_AS(csv::parse_real("0.5.1"), std::invalid_argument);
}

TEST_CASE("timestamps keep nanoseconds") {
    CHECK(Timestamp{1'700'000'000'123'456'789}.to_string() == "1700000000.123456789");
    CHECK(Timestamp{5}.to_string() == "0.000000005");
    CHECK(Timestamp::parse("12.5") == Timestamp{12'500'000'000});
    CHECK(Timestamp::parse("1700000000.123456789") == Timestamp{1'700'000'000'123'456'789});
    CHECK_FALSE(Timestamp::parse("1.1234567891"));
    CHECK_FALSE(Timestamp::parse("abc"));
}

TEST_CASE("flow CSV header") {
    std::ostringstream out;
    { FlowWriter w(out, Format::csv); }
    CHECK(out.str() ==
          "dataset_id,src_addr,src_port,dst_addr,dst_port,protocol,service,first_ts,last_ts,duration,pkts_out,"
          "pkts_in,bytes_out,bytes_in,entropy_out,entropy_in,entropy_lifecycle_std_out,entropy_lifecycle_std_in,"
          "mean_pkt_entropy_out,mean_pkt_entropy_in,std_pkt_entropy_out,std_pkt_entropy_in,termination,truncated,"
          "label\n");
}

TEST_CASE("property: flow CSV round trip is value-identical") {
    std::mt19937_64 rng(82);
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 300; ++i) recs.push_back(sample_record(rng));
    std::ostringstream out;
    {
        FlowWriter w(out, Format::csv);
        for (const auto& r : recs) w.write(r);
        w.finish();
    }
    std::istringstream in(out.str());
    const auto back = read_flows_csv(in);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i] == recs[i]);
    }

    std::ostringstream again;
    {
        FlowWriter w(again, Format::csv);
        for (const auto& r : back) w.write(r);
    }
    CHECK(again.str() == out.str());
}

TEST_CASE("schema errors name the column") {
    const auto expect_column = [](const std::string& text, const std::string& column) {
        std::istringstream in(text);
        try {
            read_flows_csv(in, "flows.csv");
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find(column) != std::string::npos);
        }
    };
    std::string header;
    for (const auto& c : flow_columns()) header += (header.empty() ? "" : ",") + c;

    std::string missing = header.substr(0, header.rfind(','));
    expect_column(missing + "\n", "label");

    expect_column(header + ",extra\n", "extra");

    std::string bad = kReordered;
    bad.replace(bad.find(",6,22,"), 6, ",99,22,");
    expect_column(bad, "protocol");
}

TEST_CASE("columns may appear in any order") {
    std::istringstream in(kReordered);
    const auto recs = read_flows_csv(in);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].out.final_entropy == 1.5);
    CHECK(recs[0].in.payload_bytes == 10);
    CHECK(recs[0].termination == Termination::fin);
}

TEST_CASE("flow JSON is one array") {
    std::mt19937_64 rng(84);
    std::ostringstream out;
    {
        FlowWriter w(out, Format::json);
        w.write(sample_record(rng));
        w.write(sample_record(rng));
    }
    const auto j = nlohmann::json::parse(out.str());
    REQUIRE(j.is_array());
    CHECK(j.size() == 2);
    CHECK(j[0].contains("out"));

    std::ostringstream empty;
    { FlowWriter w(empty, Format::json); }
    CHECK(nlohmann::json::parse(empty.str()).empty());
}

TEST_CASE("baseline CSV round trip") {
    const std::vector<BaselineRow> rows{{"ssh", 22, 7.6315, 0.6495, 7.568, 7.695, 0.605, 0.694, 678138},
                                        {"dns", 53, 4.7375, 0.3995, 4.295, 5.18, 0.364, 0.435, 3637086}};
    std::ostringstream out;
    write_baseline(out, rows);
    CHECK(out.str().rfind("service,port,mean_2way,std_2way,mean_out,mean_in,std_out,std_in,samples\n", 0) == 0);
    std::istringstream in(out.str());
    CHECK(read_baseline_csv(in) == rows);

    std::istringstream bad("service,port,mean_2way,std_2way,mean_out,mean_in,std_out,samples\n");
    CHECK_THROWS_WITH_AS(read_baseline_csv(bad), doctest::Contains("std_in"), SchemaError);
}

TEST_CASE("report CSV emits one row per scored direction") {
    DeviationReport r;
    r.dataset_id = "d";
    r.service = "dns";
    r.threshold = 3;
    r.out.scored = true;
    r.out.observed = 7.9;
    r.out.payload_bytes = 100;
    r.out.baseline_mean = 4.738;
    r.out.baseline_std = 0.399;
    r.out.z = 7.92;
    r.out.verdict = DeviationVerdict::high_entropy_anomaly;
    r.in.scored = false;
    r.verdict = DeviationVerdict::high_entropy_anomaly;
    std::ostringstream out;
    write_reports(out, std::vector{r});
    std::istringstream lines(out.str());
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK_FALSE(std::getline(lines, extra));
    const auto f = csv::split_line(row);
    REQUIRE(f.size() == report_columns().size());
    CHECK(f[8] == "out");
    CHECK(f[14] == "high_entropy_anomaly");
}

}  // TEST_SUITE
