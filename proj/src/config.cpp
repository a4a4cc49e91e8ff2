#include "adamil/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "adamil/errors.hpp"

namespace adamil {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

template <class T>
T parse_integer(std::string_view text, std::string_view key) {
    T value{};
    const auto t = trim(text);
    int base = 10;
    std::string_view digits = t;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
        base = 16;
        digits = t.substr(2);
    }
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
        throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

// Exponent of a "2^k" literal, if the text has that form.
bool dyadic_exponent(std::string_view text, int& exponent) {
    const auto t = trim(text);
    if (t.size() < 3 || t.substr(0, 2) != "2^") {
        return false;
    }
    const auto digits = t.substr(2);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), exponent);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        throw ConfigError("malformed power of two '" + std::string(text) + "'");
    }
    return true;
}

}  // namespace

double parse_real(std::string_view text) {
    int exponent = 0;
    if (dyadic_exponent(text, exponent)) {
        return std::ldexp(1.0, exponent);
    }
    const auto t = trim(text);
    const std::string s(t);
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    if (used != s.size()) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    return value;
}

std::vector<double> parse_real_list(std::string_view text) {
    const auto t = trim(text);
    const auto dots = t.find("..");
    if (dots != std::string_view::npos) {
        int lo = 0;
        int hi = 0;
        if (!dyadic_exponent(t.substr(0, dots), lo) || !dyadic_exponent(t.substr(dots + 2), hi)) {
            throw ConfigError("ranges must be dyadic, e.g. 2^-12..2^-8; got '" + std::string(text) + "'");
        }
        if (lo > hi) {
            std::swap(lo, hi);
        }
        std::vector<double> out;
        for (int e = lo; e <= hi; ++e) {
            out.push_back(std::ldexp(1.0, e));
        }
        return out;
    }
    std::vector<double> out;
    if (t.empty()) {
        return out;
    }
    for (auto part : split(t, ',')) {
        out.push_back(parse_real(part));
    }
    return out;
}

Config::Config(std::vector<std::pair<std::string, std::string>> defaults) : entries_(std::move(defaults)) {}

bool Config::has_key(std::string_view key) const {
    return std::any_of(entries_.begin(), entries_.end(), [key](const auto& e) { return e.first == key; });
}

void Config::set(std::string_view key, std::string value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

void Config::set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    }
    set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))));
}

void Config::load(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (!view.empty()) {
            set_assignment(view);
        }
    }
}

void Config::load_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot read config file '" + file.string() + "'");
    }
    load(in);
}

const std::string& Config::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return v;
        }
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

double Config::get_real(std::string_view key) const {
    try {
        return parse_real(get(key));
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + std::string(key) + "': " + e.what());
    }
}

int Config::get_int(std::string_view key) const { return parse_integer<int>(get(key), key); }

std::uint64_t Config::get_seed(std::string_view key) const { return parse_integer<std::uint64_t>(get(key), key); }

bool Config::get_bool(std::string_view key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) {
        return false;
    }
    throw ConfigError("key '" + std::string(key) + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_reals(std::string_view key) const {
    try {
        return parse_real_list(get(key));
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + std::string(key) + "': " + e.what());
    }
}

std::vector<std::string> Config::get_list(std::string_view key) const {
    std::vector<std::string> out;
    const auto& v = get(key);
    if (trim(v).empty()) {
        return out;
    }
    for (auto part : split(v, ',')) {
        out.emplace_back(part);
    }
    return out;
}

void Config::write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) {
        out << k << " = " << v << '\n';
    }
}

}  // namespace adamil
