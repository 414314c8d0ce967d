#include "gdpw/runconfig.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gdpw::runconfig {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Doubles are printed with enough digits to round-trip exactly.
std::string format_real(double v) {
    std::ostringstream oss;
    oss.precision(17);
    oss << v;
    return oss.str();
}

}  // namespace

bool Config::has(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return true;
    }
    return false;
}

const std::string& Config::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    throw UsageError("missing config key '" + key + "'");
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

int64_t Config::get_int(const std::string& key) const {
    const std::string& v = get(key);
    errno = 0;
    char* end = nullptr;
    const long long parsed = std::strtoll(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0') {
        throw UsageError("config key '" + key + "' is not an integer: '" + v + "'");
    }
    return parsed;
}

double Config::get_real(const std::string& key) const {
    const std::string& v = get(key);
    errno = 0;
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (errno != 0 || end == v.c_str() || *end != '\0') {
        throw UsageError("config key '" + key + "' is not a real number: '" + v + "'");
    }
    return parsed;
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw UsageError("config key '" + key + "' is not a boolean: '" + v + "'");
}

void Config::set(const std::string& key, const std::string& value) {
    require(!key.empty(), "empty config key");
    require(key.find('=') == std::string::npos, "config key may not contain '='");
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Config::set_int(const std::string& key, int64_t value) { set(key, std::to_string(value)); }
void Config::set_real(const std::string& key, double value) { set(key, format_real(value)); }
void Config::set_bool(const std::string& key, bool value) { set(key, value ? "true" : "false"); }

void Config::check_keys(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : entries_) {
        if (allowed.count(k) == 0) {
            throw UsageError("unknown config key '" + k + "'");
        }
    }
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k + "=" + v + "\n";
    }
    return out;
}

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream iss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(iss, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + " has no '=': " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw UsageError("config line " + std::to_string(line_no) + " has an empty key");
        }
        if (c.has(key)) {
            throw UsageError("duplicate config key '" + key + "'");
        }
        c.set(key, value);
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return parse(oss.str());
}

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write config file " + path);
    out << serialize();
    require(static_cast<bool>(out), "failed writing config file " + path);
}

const std::set<std::string>& model_config_keys() {
    static const std::set<std::string> keys = {
        "hidden_dim",      "gcn_layers",       "projection_dim",  "learning_rate",
        "sigma_km",        "delta_d_km",       "gravity_denominator", "loss_weight_poi",
        "loss_weight_cat", "loss_weight_time", "loss_weight_cl",  "seed",
        "variant"};
    return keys;
}

Config from_model_config(const model::ModelConfig& mc, model::Variant variant) {
    Config c;
    c.set_int("hidden_dim", mc.hidden_dim);
    c.set_int("gcn_layers", mc.gcn_layers);
    c.set_int("projection_dim", mc.projection_dim);
    c.set_real("learning_rate", mc.learning_rate);
    c.set_real("sigma_km", mc.sigma_km);
    c.set_real("delta_d_km", mc.delta_d_km);
    c.set("gravity_denominator", graphs::to_string(mc.gravity_denominator));
    c.set_real("loss_weight_poi", mc.loss_weight_poi);
    c.set_real("loss_weight_cat", mc.loss_weight_cat);
    c.set_real("loss_weight_time", mc.loss_weight_time);
    c.set_real("loss_weight_cl", mc.loss_weight_cl);
    c.set_int("seed", static_cast<int64_t>(mc.seed));
    c.set("variant", model::to_string(variant));
    return c;
}

model::ModelConfig to_model_config(const Config& c) {
    c.check_keys(model_config_keys());
    model::ModelConfig mc;
    if (c.has("hidden_dim")) mc.hidden_dim = static_cast<int>(c.get_int("hidden_dim"));
    if (c.has("gcn_layers")) mc.gcn_layers = static_cast<int>(c.get_int("gcn_layers"));
    if (c.has("projection_dim")) mc.projection_dim = static_cast<int>(c.get_int("projection_dim"));
    if (c.has("learning_rate")) mc.learning_rate = c.get_real("learning_rate");
    if (c.has("sigma_km")) mc.sigma_km = c.get_real("sigma_km");
    if (c.has("delta_d_km")) mc.delta_d_km = c.get_real("delta_d_km");
    if (c.has("gravity_denominator")) {
        mc.gravity_denominator = graphs::gravity_denominator_from_string(c.get("gravity_denominator"));
    }
    if (c.has("loss_weight_poi")) mc.loss_weight_poi = c.get_real("loss_weight_poi");
    if (c.has("loss_weight_cat")) mc.loss_weight_cat = c.get_real("loss_weight_cat");
    if (c.has("loss_weight_time")) mc.loss_weight_time = c.get_real("loss_weight_time");
    if (c.has("loss_weight_cl")) mc.loss_weight_cl = c.get_real("loss_weight_cl");
    if (c.has("seed")) mc.seed = static_cast<uint64_t>(c.get_int("seed"));
    mc.validate();
    return mc;
}

model::Variant variant_of(const Config& c) {
    return model::variant_from_string(c.get_or("variant", "full"));
}

uint64_t fingerprint(const Config& c) { return fnv1a64(c.serialize()); }

}  // namespace gdpw::runconfig
