#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace copreg {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key = value configuration ('#' starts a comment, blank lines
/// ignored).  Later assignments win, so flag overrides are plain set() calls.
class Config {
  public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::string require_str(const std::string& key) const;
    double get_num(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    std::uint64_t get_seed(std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated numeric list.
    std::vector<double> get_list(const std::string& key,
                                 const std::vector<double>& fallback) const;
    std::vector<std::string> get_str_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const;

    /// FNV-1a hash of the normalized contents; embedded in table outputs.
    std::string hash() const;

  private:
    std::map<std::string, std::string> values_;
};

} // namespace copreg
