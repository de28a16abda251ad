#include "flowent/pcap.hpp"
#include "frame_builder.hpp"

#include <doctest.h>

#include <sstream>

using namespace flowent;
using namespace flowent::test;

namespace {

void le32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void be32(std::string& s, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void le16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
}
void be16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v >> 8));
    s.push_back(static_cast<char>(v & 0xFF));
}

std::string header(std::uint32_t magic, bool big_endian, std::uint32_t link = 1) {
    std::string s;
    auto w32 = big_endian ? be32 : le32;
    auto w16 = big_endian ? be16 : le16;
    w32(s, magic);
    w16(s, 2);
    w16(s, 4);
    w32(s, 0);
    w32(s, 0);
    w32(s, 65535);
    w32(s, link);
    return s;
}

void record(std::string& s, bool big_endian, std::uint32_t sec, std::uint32_t frac, std::string_view data,
            std::uint32_t orig = 0) {
    auto w32 = big_endian ? be32 : le32;
    w32(s, sec);
    w32(s, frac);
    w32(s, static_cast<std::uint32_t>(data.size()));
    w32(s, orig ? orig : static_cast<std::uint32_t>(data.size()));
    s.append(data);
}

pcap::Reader reader_of(std::string bytes) {
    return pcap::Reader(std::make_unique<std::istringstream>(std::move(bytes)));
}

}  // namespace

TEST_SUITE("pcap") {

TEST_CASE("microsecond magic, both byte orders") {
    for (bool big : {false, true}) {
        std::string s = header(pcap::kMagicMicro, big);
        record(s, big, 10, 500000, "abc");
        auto r = reader_of(s);
        CHECK(r.resolution() == pcap::Resolution::micro);
        CHECK(r.byte_swapped() == big);
        CHECK(r.link_type() == pcap::LinkType::ethernet);
        auto rec = r.next();
        REQUIRE(rec);
        CHECK(rec->ts == Timestamp::from_parts(10, 500000000));
        CHECK(std::string(rec->data.begin(), rec->data.end()) == "abc");
        CHECK_FALSE(r.next());
    }
}

TEST_CASE("nanosecond magic") {
    std::string s = header(pcap::kMagicNano, false);
    record(s, false, 1, 123456789, "z");
    auto r = reader_of(s);
    CHECK(r.resolution() == pcap::Resolution::nano);
    auto rec = r.next();
    REQUIRE(rec);
    CHECK(rec->ts.ns == 1'123'456'789);
}

TEST_CASE("header-only file has no records") {
    auto r = reader_of(header(pcap::kMagicMicro, false));
    CHECK_FALSE(r.next());
    CHECK(r.records_read() == 0);
    CHECK(r.truncated_records() == 0);
}

TEST_CASE("rejected inputs") {
    CHECK_THROWS_AS(reader_of(""), pcap::CaptureError);
    CHECK_THROWS_AS(reader_of("short"), pcap::CaptureError);
    CHECK_THROWS_AS(reader_of(header(0x12345678, false)), pcap::CaptureError);
    CHECK_THROWS_AS(reader_of(header(0x0A0D0D0A, false)), pcap::CaptureError);
    CHECK_THROWS_AS(reader_of(header(pcap::kMagicMicro, false, 105)), pcap::CaptureError);
    try {
        reader_of(header(0x0A0D0D0A, false));
    } catch (const pcap::CaptureError& e) {
        CHECK(std::string(e.what()).find("pcapng") != std::string::npos);
    }
}

TEST_CASE("truncated trailing record is counted") {
    std::string s = header(pcap::kMagicMicro, false);
    record(s, false, 1, 0, "first");
    record(s, false, 2, 0, "second");
    s.resize(s.size() - 3);
    auto r = reader_of(s);
    CHECK(r.next());
    CHECK_FALSE(r.next());
    CHECK(r.records_read() == 1);
    CHECK(r.truncated_records() == 1);

    std::string half_header = header(pcap::kMagicMicro, false);
    half_header.append("\x01\x02\x03", 3);
    auto r2 = reader_of(half_header);
    CHECK_FALSE(r2.next());
    CHECK(r2.truncated_records() == 1);
}

TEST_CASE("writer round trip") {
    auto buf = std::make_unique<std::ostringstream>();
    auto* raw = buf.get();
    {
        pcap::Writer w(std::move(buf), pcap::LinkType::raw, pcap::Resolution::nano);
        const Bytes a = bytes_of("hello");
        const Bytes b = bytes_of("world!");
        w.write(Timestamp{1'000'000'001}, a);
        w.write(Timestamp{2'500'000'000}, b, 100);
        w.flush();
        auto r = reader_of(raw->str());
        CHECK(r.link_type() == pcap::LinkType::raw);
        CHECK(r.resolution() == pcap::Resolution::nano);
        auto r1 = r.next();
        REQUIRE(r1);
        CHECK(r1->ts.ns == 1'000'000'001);
        CHECK(r1->orig_len == 5);
        auto r2 = r.next();
        REQUIRE(r2);
        CHECK(r2->ts.ns == 2'500'000'000);
        CHECK(r2->orig_len == 100);
        CHECK(std::string(r2->data.begin(), r2->data.end()) == "world!");
        CHECK_FALSE(r.next());
    }
}

TEST_CASE("open reports the path") {
    try {
        pcap::Reader::open("/nonexistent/capture.pcap");
        FAIL("expected CaptureError");
    } catch (const pcap::CaptureError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/capture.pcap") != std::string::npos);
    }
}

}  // TEST_SUITE
