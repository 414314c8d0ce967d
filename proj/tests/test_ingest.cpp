#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gdpw/common.hpp"
#include "gdpw/ingest.hpp"
#include "gdpw/timeutil.hpp"

using namespace gdpw;
namespace fs = std::filesystem;

namespace {

int64_t g_record_id = 0;

CheckInRecord rec(const std::string& user, const std::string& poi, const std::string& cat,
                  int64_t utc, int32_t tz = 0) {
    CheckInRecord r;
    r.user_id = user;
    r.poi_id = poi;
    r.category_id = cat;
    r.category_name = "name " + cat;
    r.latitude = 40.75;
    r.longitude = -73.98;
    r.utc_time = utc;
    r.tz_offset_minutes = tz;
    r.local_time = utc + 60 * static_cast<int64_t>(tz);
    r.record_id = ++g_record_id;
    return r;
}

std::string temp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

const char* kGoodLine =
    "470\t49bbd6c0f964a520f4531fe3\t4bf58dd8d48988d127951735\tArts & Crafts Store\t"
    "40.719810375488535\t-74.00258103213994\t-240\tTue Apr 03 18:00:09 +0000 2012\n";

}  // namespace

TEST_CASE("parse: field extraction and offset arithmetic") {
    const std::string path = temp_file("gdpw_ingest_parse.tsv");
    {
        std::ofstream out(path);
        out << kGoodLine;
        out << "12\tpoi_b\tcat_b\tBar\t35.5\t139.7\t540\tSat Feb 16 02:30:00 +0000 2013\n";
    }
    auto result = ingest::parse_checkins(path);
    REQUIRE(result.records.size() == 2);
    CHECK(result.total_rows == 2);
    CHECK(result.malformed_rows.empty());

    const auto& a = result.records[0];
    CHECK(a.user_id == "470");
    CHECK(a.poi_id == "49bbd6c0f964a520f4531fe3");
    CHECK(a.category_id == "4bf58dd8d48988d127951735");
    CHECK(a.category_name == "Arts & Crafts Store");
    CHECK(a.latitude == doctest::Approx(40.719810375488535));
    CHECK(a.longitude == doctest::Approx(-74.00258103213994));
    CHECK(a.tz_offset_minutes == -240);
    CHECK(a.utc_time == timeutil::epoch_seconds(2012, 4, 3, 18, 0, 9));
    CHECK(a.local_time == a.utc_time - 240 * 60);

    const auto& b = result.records[1];
    CHECK(b.utc_time == timeutil::epoch_seconds(2013, 2, 16, 2, 30, 0));
    CHECK(b.local_time == b.utc_time + 540 * 60);  // east of UTC
}

TEST_CASE("parse: malformed rows are recorded and skipped when rare") {
    const std::string path = temp_file("gdpw_ingest_malformed.tsv");
    {
        std::ofstream out(path);
        for (int i = 0; i < 150; ++i) out << kGoodLine;
        out << "only\tthree\tcolumns\n";
        for (int i = 0; i < 150; ++i) out << kGoodLine;
        out << "u\tp\tc\tname\t95.0\t-74.0\t-240\tTue Apr 03 18:00:09 +0000 2012\n";
    }
    auto result = ingest::parse_checkins(path);
    CHECK(result.total_rows == 302);
    CHECK(result.records.size() == 300);
    REQUIRE(result.malformed_rows.size() == 2);
    CHECK(result.malformed_rows[0] == 151);  // 1-based row numbers
    CHECK(result.malformed_rows[1] == 302);
}

TEST_CASE("parse: more than one percent malformed rows is an error") {
    const std::string path = temp_file("gdpw_ingest_too_bad.tsv");
    {
        std::ofstream out(path);
        out << kGoodLine << kGoodLine << kGoodLine;
        out << "garbage line\n";
    }
    CHECK_THROWS_AS(ingest::parse_checkins(path), FatalError);
}

TEST_CASE("parse: missing file is a usage error") {
    CHECK_THROWS_AS(ingest::parse_checkins(temp_file("gdpw_no_such_file.tsv")), UsageError);
}

TEST_CASE("filter: poi threshold first, then user threshold, one pass") {
    std::vector<CheckInRecord> records;
    // u1: ten records at poi A; survives both thresholds exactly at the edge.
    for (int i = 0; i < 10; ++i) records.push_back(rec("u1", "A", "c", 1000 * i));
    // u2: nine at poi B (B total 9 -> dropped), three at A; three remaining
    // check-ins leave u2 under the user threshold.
    for (int i = 0; i < 9; ++i) records.push_back(rec("u2", "B", "c", 2000 * i));
    for (int i = 0; i < 3; ++i) records.push_back(rec("u2", "A", "c", 3000 * i));
    // u3: nine at A plus one at C (C total 1 -> dropped). C's drop leaves u3
    // with nine, under the threshold, because the poi pass never reruns on
    // the shrunken user set.
    for (int i = 0; i < 9; ++i) records.push_back(rec("u3", "A", "c", 4000 * i));
    records.push_back(rec("u3", "C", "c", 50000));

    ingest::FilterStats stats;
    auto kept = ingest::filter_sparse(records, &stats);
    REQUIRE(kept.size() == 10);
    for (const auto& r : kept) CHECK(r.user_id == "u1");
    CHECK(stats.pois_dropped == 2);
    CHECK(stats.users_dropped == 2);
    CHECK(stats.checkins_dropped == static_cast<int64_t>(records.size() - kept.size()));
}

TEST_CASE("segmentation: short gaps join, long gaps split, short pieces drop") {
    const int64_t h = 3600;
    std::vector<CheckInRecord> records;
    // One run: 0h, 1h, 2h, then a 40h gap, then 42h..44h.
    for (int64_t t : {0 * h, 1 * h, 2 * h}) records.push_back(rec("u", "p", "c", t));
    for (int64_t t : {42 * h, 43 * h, 44 * h}) records.push_back(rec("u", "p", "c", t));
    // A second user whose fragments are all shorter than three.
    records.push_back(rec("v", "p", "c", 0));
    records.push_back(rec("v", "p", "c", 40 * h));
    records.push_back(rec("v", "p", "c", 80 * h));

    auto trajectories = ingest::segment_trajectories(records);
    REQUIRE(trajectories.size() == 2);
    CHECK(trajectories[0].user_id == "u");
    CHECK(trajectories[1].user_id == "u");
    CHECK(trajectories[0].check_ins.size() == 3);
    CHECK(trajectories[1].check_ins.size() == 3);
    CHECK(trajectories[0].check_ins.back().local_time == 2 * h);
    CHECK(trajectories[1].check_ins.front().local_time == 42 * h);
}

TEST_CASE("segmentation: a gap of exactly 24h does not split") {
    const int64_t h = 3600;
    std::vector<CheckInRecord> records;
    for (int64_t t : {0 * h, 24 * h, 48 * h}) records.push_back(rec("u", "p", "c", t));
    auto trajectories = ingest::segment_trajectories(records);
    REQUIRE(trajectories.size() == 1);
    CHECK(trajectories[0].check_ins.size() == 3);
}

TEST_CASE("segmentation: records arrive unsorted") {
    const int64_t h = 3600;
    std::vector<CheckInRecord> records;
    records.push_back(rec("u", "p", "c", 3 * h));
    records.push_back(rec("u", "p", "c", 0 * h));
    records.push_back(rec("u", "p", "c", 1 * h));
    records.push_back(rec("u", "p", "c", 2 * h));
    auto trajectories = ingest::segment_trajectories(records);
    REQUIRE(trajectories.size() == 1);
    REQUIRE(trajectories[0].check_ins.size() == 4);
    for (size_t i = 1; i < 4; ++i)
        CHECK(trajectories[0].check_ins[i - 1].local_time <
              trajectories[0].check_ins[i].local_time);
}

TEST_CASE("split: floor boundaries at 80 and 90 percent") {
    auto make = [](int n) {
        std::vector<Trajectory> out;
        for (int i = 0; i < n; ++i) {
            Trajectory t;
            t.user_id = "u";
            t.check_ins.push_back(rec("u", "p", "c", 1000 * i));
            out.push_back(std::move(t));
        }
        return out;
    };

    auto s100 = ingest::split_dataset(make(100));
    CHECK(s100.train.size() == 80);
    CHECK(s100.val.size() == 10);
    CHECK(s100.test.size() == 10);

    auto s10 = ingest::split_dataset(make(10));
    CHECK(s10.train.size() == 8);
    CHECK(s10.val.size() == 1);
    CHECK(s10.test.size() == 1);

    // The published corpus size: 15992 trajectories split 12793/1599/1600.
    auto big = ingest::split_dataset(make(15992));
    CHECK(big.train.size() == 12793);
    CHECK(big.val.size() == 1599);
    CHECK(big.test.size() == 1600);

    CHECK_THROWS_AS(ingest::split_dataset(make(9)), FatalError);
}

TEST_CASE("split: chronological by first check-in") {
    std::vector<Trajectory> trajectories;
    for (int i = 0; i < 20; ++i) {
        Trajectory t;
        t.user_id = "u";
        t.check_ins.push_back(rec("u", "p", "c", 1000 * ((i * 7) % 20)));  // shuffled times
        trajectories.push_back(std::move(t));
    }
    auto s = ingest::split_dataset(trajectories);
    REQUIRE(s.train.size() == 16);
    int64_t last_train = s.train.back().check_ins.front().local_time;
    for (const auto& t : s.val) CHECK(t.check_ins.front().local_time >= last_train);
    for (const auto& t : s.test)
        CHECK(t.check_ins.front().local_time >= s.val.back().check_ins.front().local_time);
}

TEST_CASE("time slots: weekday hours 0..23, weekend hours 24..47") {
    // 2012-04-03 was a Tuesday, 2012-04-07 a Saturday, 2012-04-02 a Monday.
    CHECK(ingest::encode_time_slot(timeutil::epoch_seconds(2012, 4, 3, 7, 30, 0)) == 7);
    CHECK(ingest::encode_time_slot(timeutil::epoch_seconds(2012, 4, 7, 23, 10, 0)) == 47);
    CHECK(ingest::encode_time_slot(timeutil::epoch_seconds(2012, 4, 2, 0, 0, 0)) == 0);
    CHECK(ingest::encode_time_slot(timeutil::epoch_seconds(2012, 4, 8, 0, 0, 0)) == 24);  // Sunday
    CHECK(ingest::encode_time_slot(timeutil::epoch_seconds(2012, 4, 9, 0, 0, 0)) == 0);   // Monday
}

TEST_CASE("vocabulary: first-appearance order, coords and category per poi") {
    std::vector<CheckInRecord> records;
    auto r1 = rec("u2", "pB", "c9", 0);
    r1.latitude = 40.1;
    r1.longitude = -73.1;
    auto r2 = rec("u1", "pA", "c3", 1);
    auto r3 = rec("u2", "pB", "c9", 2);
    records = {r1, r2, r3};

    auto vocab = ingest::build_vocabulary(records);
    CHECK(vocab.n_users() == 2);
    CHECK(vocab.n_pois() == 2);
    CHECK(vocab.n_cats() == 2);
    CHECK(vocab.users[0] == "u2");
    CHECK(vocab.pois[0] == "pB");
    CHECK(vocab.cats[0] == "c9");
    CHECK(vocab.cat_display[0] == "name c9");
    CHECK(vocab.poi_coords[0][0] == doctest::Approx(40.1));
    CHECK(vocab.poi_coords[0][1] == doctest::Approx(-73.1));
    CHECK(vocab.poi_category[0] == 0);
    CHECK(vocab.poi_category[1] == 1);

    auto again = ingest::build_vocabulary(records);
    CHECK(vocab.hash() == again.hash());
    records.push_back(rec("u3", "pC", "c3", 3));
    CHECK(vocab.hash() != ingest::build_vocabulary(records).hash());
}

TEST_CASE("samples: one per prefix length from 2 to m-1") {
    const int64_t h = 3600;
    std::vector<CheckInRecord> records;
    for (int i = 0; i < 5; ++i) records.push_back(rec("u", "p" + std::to_string(i), "c", i * h));
    auto vocab = ingest::build_vocabulary(records);
    auto trajectories = ingest::segment_trajectories(records);
    REQUIRE(trajectories.size() == 1);
    std::vector<IndexedTrajectory> indexed = {ingest::index_trajectory(trajectories[0], vocab)};

    auto samples = ingest::make_samples(indexed);
    REQUIRE(samples.size() == 3);  // m = 5 -> k in {2, 3, 4}
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        CHECK(s.prefix.size() == i + 2);
        CHECK(s.target_poi == static_cast<int32_t>(i + 2));  // poi ids appear in order
        for (size_t j = 0; j < s.prefix.size(); ++j)
            CHECK(s.prefix[j].poi == static_cast<int32_t>(j));
    }

    // A length-3 trajectory yields exactly one sample; length-2 would yield none,
    // but segmentation already dropped those.
    std::vector<CheckInRecord> three;
    for (int i = 0; i < 3; ++i) three.push_back(rec("u", "p" + std::to_string(i), "c", i * h));
    auto v3 = ingest::build_vocabulary(three);
    auto t3 = ingest::segment_trajectories(three);
    std::vector<IndexedTrajectory> i3 = {ingest::index_trajectory(t3[0], v3)};
    CHECK(ingest::make_samples(i3).size() == 1);
}

TEST_CASE("samples: time fraction and day of week of the target") {
    std::vector<CheckInRecord> records;
    const int64_t base = timeutil::epoch_seconds(2012, 4, 3, 10, 0, 0);  // Tuesday
    for (int i = 0; i < 3; ++i) records.push_back(rec("u", "p", "c", base + i * 3600));
    // Target (third check-in) is at 12:00 local -> fraction 0.5.
    auto vocab = ingest::build_vocabulary(records);
    auto trajectories = ingest::segment_trajectories(records);
    std::vector<IndexedTrajectory> indexed = {ingest::index_trajectory(trajectories[0], vocab)};
    auto samples = ingest::make_samples(indexed);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].target_time_fraction == doctest::Approx(0.5));
    CHECK(samples[0].prefix[1].day_of_week == 1);  // Tuesday

    CHECK(indexed[0].steps[0].time_fraction == doctest::Approx(10.0 / 24.0));
}
