#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adamil {

/**
 * Ordered key/value settings with a fixed key set.
 *
 * Text format: one `key = value` per line; `#` starts a comment. Setting a key
 * outside the known set throws ConfigError naming the key. Later sets win, so
 * applying defaults, then a file, then flags gives flag > file > default.
 */
class Config {
public:
    explicit Config(std::vector<std::pair<std::string, std::string>> defaults);

    bool has_key(std::string_view key) const;
    void set(std::string_view key, std::string value);
    // "key=value"
    void set_assignment(std::string_view assignment);
    void load(std::istream& in);
    void load_file(const std::filesystem::path& file);

    const std::string& get(std::string_view key) const;
    double get_real(std::string_view key) const;
    int get_int(std::string_view key) const;
    std::uint64_t get_seed(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    std::vector<double> get_reals(std::string_view key) const;
    std::vector<std::string> get_list(std::string_view key) const;

    // Resolved settings in load() format.
    void write(std::ostream& out) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Reals: decimal literals or dyadic powers "2^-8" / "2^4".
double parse_real(std::string_view text);

// Comma-separated reals, or a dyadic range "2^-12..2^-8" expanding to every power
// of two between the endpoints, ascending.
std::vector<double> parse_real_list(std::string_view text);

}  // namespace adamil
