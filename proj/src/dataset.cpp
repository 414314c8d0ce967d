#include "gdpw/dataset.hpp"

#include <array>

#include "gdpw/container.hpp"
#include "gdpw/ingest.hpp"

namespace gdpw {

namespace {

constexpr const char* kSchema = "gdpw.dataset/v1";

void write_split(container::Writer& w, const std::string& prefix,
                 const std::vector<IndexedTrajectory>& trajs) {
    std::vector<int64_t> user, offsets, poi, cat, slot, dow, local_time;
    std::vector<double> fraction;
    offsets.push_back(0);
    for (const auto& t : trajs) {
        user.push_back(t.user);
        for (const auto& s : t.steps) {
            poi.push_back(s.poi);
            cat.push_back(s.cat);
            slot.push_back(s.time_slot);
            dow.push_back(s.day_of_week);
            local_time.push_back(s.local_time);
            fraction.push_back(s.time_fraction);
        }
        offsets.push_back(static_cast<int64_t>(poi.size()));
    }
    w.add_i64(prefix + ".user", user);
    w.add_i64(prefix + ".offsets", offsets);
    w.add_i64(prefix + ".poi", poi);
    w.add_i64(prefix + ".cat", cat);
    w.add_i64(prefix + ".slot", slot);
    w.add_i64(prefix + ".dow", dow);
    w.add_i64(prefix + ".local_time", local_time);
    w.add_f64(prefix + ".fraction", fraction);
}

std::vector<IndexedTrajectory> read_split(const container::Reader& r, const std::string& prefix) {
    auto user = r.i64(prefix + ".user");
    auto offsets = r.i64(prefix + ".offsets");
    auto poi = r.i64(prefix + ".poi");
    auto cat = r.i64(prefix + ".cat");
    auto slot = r.i64(prefix + ".slot");
    auto dow = r.i64(prefix + ".dow");
    auto local_time = r.i64(prefix + ".local_time");
    auto fraction = r.f64(prefix + ".fraction");

    std::vector<IndexedTrajectory> trajs(user.size());
    for (size_t t = 0; t < user.size(); ++t) {
        trajs[t].user = static_cast<int32_t>(user[t]);
        for (int64_t i = offsets[t]; i < offsets[t + 1]; ++i) {
            IndexedCheckIn s;
            s.poi = static_cast<int32_t>(poi[i]);
            s.cat = static_cast<int32_t>(cat[i]);
            s.time_slot = static_cast<int32_t>(slot[i]);
            s.day_of_week = static_cast<int32_t>(dow[i]);
            s.local_time = local_time[i];
            s.time_fraction = fraction[i];
            trajs[t].steps.push_back(s);
        }
    }
    return trajs;
}

}  // namespace

uint64_t Vocabulary::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix_list = [&h](const std::vector<std::string>& v) {
        for (const auto& s : v) {
            h = fnv1a64(s, h);
            h = fnv1a64_bytes("\x1f", 1, h);
        }
        h = fnv1a64_bytes("\x1e", 1, h);
    };
    mix_list(users);
    mix_list(pois);
    mix_list(cats);
    for (size_t i = 0; i < poi_coords.size(); ++i) {
        h = fnv1a64_bytes(&poi_coords[i][0], sizeof(double) * 2, h);
        h = fnv1a64_bytes(&poi_category[i], sizeof(int32_t), h);
    }
    return h;
}

std::vector<PredictionSample> Dataset::samples(const std::string& split_name) const {
    return ingest::make_samples(split(split_name));
}

const std::vector<IndexedTrajectory>& Dataset::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw UsageError("unknown split: " + name + " (expected train|val|test)");
}

void Dataset::save(const std::string& path) const {
    container::Writer w(kSchema);
    w.add_strings("vocab.users", vocab.users);
    w.add_strings("vocab.pois", vocab.pois);
    w.add_strings("vocab.cats", vocab.cats);
    w.add_strings("vocab.cat_display", vocab.cat_display);
    std::vector<double> lat, lon;
    for (const auto& c : vocab.poi_coords) {
        lat.push_back(c[0]);
        lon.push_back(c[1]);
    }
    w.add_f64("vocab.poi_lat", lat);
    w.add_f64("vocab.poi_lon", lon);
    std::vector<int64_t> pc(vocab.poi_category.begin(), vocab.poi_category.end());
    w.add_i64("vocab.poi_cat", pc);
    write_split(w, "train", train);
    write_split(w, "val", val);
    write_split(w, "test", test);
    w.add_i64("stats", {stats.raw_rows, stats.malformed_rows, stats.filtered_checkins,
                        stats.n_users, stats.n_pois, stats.n_cats, stats.n_trajectories});
    w.save(path);
}

Dataset Dataset::load(const std::string& path) {
    auto r = container::Reader::load(path);
    require(r.schema() == kSchema,
            "dataset file has schema '" + r.schema() + "', expected '" + kSchema + "'");
    Dataset d;
    d.vocab.users = r.strings("vocab.users");
    d.vocab.pois = r.strings("vocab.pois");
    d.vocab.cats = r.strings("vocab.cats");
    d.vocab.cat_display = r.strings("vocab.cat_display");
    auto lat = r.f64("vocab.poi_lat");
    auto lon = r.f64("vocab.poi_lon");
    for (size_t i = 0; i < lat.size(); ++i) d.vocab.poi_coords.push_back({lat[i], lon[i]});
    for (int64_t c : r.i64("vocab.poi_cat")) d.vocab.poi_category.push_back(static_cast<int32_t>(c));
    for (size_t i = 0; i < d.vocab.users.size(); ++i)
        d.vocab.user_index[d.vocab.users[i]] = static_cast<int32_t>(i);
    for (size_t i = 0; i < d.vocab.pois.size(); ++i)
        d.vocab.poi_index[d.vocab.pois[i]] = static_cast<int32_t>(i);
    for (size_t i = 0; i < d.vocab.cats.size(); ++i)
        d.vocab.cat_index[d.vocab.cats[i]] = static_cast<int32_t>(i);
    d.train = read_split(r, "train");
    d.val = read_split(r, "val");
    d.test = read_split(r, "test");
    auto st = r.i64("stats");
    require(st.size() == 7, "dataset stats section malformed");
    d.stats = {st[0], st[1], st[2], st[3], st[4], st[5], st[6]};
    return d;
}

namespace ingest {

Dataset run_pipeline(const std::string& raw_file) {
    auto parsed = parse_checkins(raw_file);
    auto filtered = filter_sparse(parsed.records);
    auto trajectories = segment_trajectories(filtered);
    auto split = split_dataset(std::move(trajectories));

    Dataset d;
    d.vocab = build_vocabulary(filtered);
    for (const auto& t : split.train) d.train.push_back(index_trajectory(t, d.vocab));
    for (const auto& t : split.val) d.val.push_back(index_trajectory(t, d.vocab));
    for (const auto& t : split.test) d.test.push_back(index_trajectory(t, d.vocab));

    d.stats.raw_rows = parsed.total_rows;
    d.stats.malformed_rows = static_cast<int64_t>(parsed.malformed_rows.size());
    d.stats.filtered_checkins = static_cast<int64_t>(filtered.size());
    d.stats.n_users = d.vocab.n_users();
    d.stats.n_pois = d.vocab.n_pois();
    d.stats.n_cats = d.vocab.n_cats();
    d.stats.n_trajectories =
        static_cast<int64_t>(d.train.size() + d.val.size() + d.test.size());
    return d;
}

}  // namespace ingest
}  // namespace gdpw
