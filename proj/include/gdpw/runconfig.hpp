#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gdpw/common.hpp"
#include "gdpw/model.hpp"

namespace gdpw::runconfig {

// Flat key=value text; one pair per line, '#' starts a comment, blank lines
// ignored. Keys keep insertion order so serialization is stable.
class Config {
  public:
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key) const;
    double get_real(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, int64_t value);
    void set_real(const std::string& key, double value);
    void set_bool(const std::string& key, bool value);

    // Rejects keys outside the allowed set; catches typos in config files.
    void check_keys(const std::set<std::string>& allowed) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string serialize() const;
    static Config parse(const std::string& text);
    static Config load(const std::string& path);
    void save(const std::string& path) const;

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// ModelConfig round-trip through the flat format; used for run snapshots and
// checkpoint self-description.
Config from_model_config(const model::ModelConfig& mc, model::Variant variant);
model::ModelConfig to_model_config(const Config& c);
model::Variant variant_of(const Config& c);

const std::set<std::string>& model_config_keys();

uint64_t fingerprint(const Config& c);

}  // namespace gdpw::runconfig
