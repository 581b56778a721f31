#include "chanest/tdl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "chanest/errors.hpp"
#include "chanest/tdl_table_data.hpp"

namespace chanest {

const char* to_string(TdlProfileName name) {
    switch (name) {
        case TdlProfileName::TdlA: return "TDL-A";
        case TdlProfileName::TdlB: return "TDL-B";
        case TdlProfileName::TdlC: return "TDL-C";
        case TdlProfileName::TdlD: return "TDL-D";
        case TdlProfileName::TdlE: return "TDL-E";
    }
    return "?";
}

TdlProfileName tdl_profile_from_string(std::string_view s) {
    if (s == "TDL-A") return TdlProfileName::TdlA;
    if (s == "TDL-B") return TdlProfileName::TdlB;
    if (s == "TDL-C") return TdlProfileName::TdlC;
    if (s == "TDL-D") return TdlProfileName::TdlD;
    if (s == "TDL-E") return TdlProfileName::TdlE;
    throw UnknownProfile("unknown TDL profile: " + std::string(s));
}

std::vector<TdlProfileName> all_tdl_profiles() {
    return {TdlProfileName::TdlA, TdlProfileName::TdlB, TdlProfileName::TdlC,
            TdlProfileName::TdlD, TdlProfileName::TdlE};
}

namespace {

void finalize_profile(TdlProfile& p) {
    if (p.taps.empty()) throw FormatError("TDL profile has no taps");
    std::stable_sort(p.taps.begin(), p.taps.end(),
                     [](const TdlTap& a, const TdlTap& b) {
                         return a.normalized_delay < b.normalized_delay;
                     });
    if (p.taps.front().normalized_delay != 0.0)
        throw FormatError("TDL profile: first tap delay must be 0");
    for (std::size_t i = 1; i < p.taps.size(); ++i) {
        if (p.taps[i].is_los)
            throw FormatError("TDL profile: los flag allowed only on the first tap");
    }
    if (p.taps.front().is_los && !p.has_k_factor)
        throw FormatError("TDL profile: los tap requires k_factor_db");

    double total = 0.0;
    p.linear_powers.resize(p.taps.size());
    for (std::size_t i = 0; i < p.taps.size(); ++i) {
        p.linear_powers[i] = std::pow(10.0, p.taps[i].power_db / 10.0);
        total += p.linear_powers[i];
    }
    for (double& w : p.linear_powers) w /= total;
}

}  // namespace

std::vector<TdlProfile> parse_tdl_table(std::string_view text) {
    std::vector<TdlProfile> profiles;
    TdlProfile current;
    bool in_profile = false;

    std::istringstream stream{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;

        if (key == "profile") {
            if (in_profile) {
                finalize_profile(current);
                profiles.push_back(std::move(current));
            }
            current = TdlProfile{};
            std::string name;
            if (!(ls >> name))
                throw FormatError("tdl table: missing profile name at line " + std::to_string(lineno));
            current.name = tdl_profile_from_string(name);
            in_profile = true;
        } else if (key == "k_factor_db") {
            if (!in_profile || !(ls >> current.rician_k_db))
                throw FormatError("tdl table: bad k_factor_db at line " + std::to_string(lineno));
            current.has_k_factor = true;
        } else if (key == "tap") {
            TdlTap tap;
            if (!in_profile || !(ls >> tap.normalized_delay >> tap.power_db))
                throw FormatError("tdl table: bad tap at line " + std::to_string(lineno));
            if (tap.normalized_delay < 0)
                throw FormatError("tdl table: negative delay at line " + std::to_string(lineno));
            std::string flag;
            if (ls >> flag) {
                if (flag != "los")
                    throw FormatError("tdl table: unknown tap flag at line " + std::to_string(lineno));
                tap.is_los = true;
            }
            current.taps.push_back(tap);
        } else {
            throw FormatError("tdl table: unknown directive '" + key + "' at line " +
                              std::to_string(lineno));
        }
    }
    if (in_profile) {
        finalize_profile(current);
        profiles.push_back(std::move(current));
    }
    return profiles;
}

std::vector<TdlProfile> load_tdl_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open tdl table: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_tdl_table(buf.str());
}

namespace {

const std::map<TdlProfileName, TdlProfile>& bundled_profiles() {
    static const std::map<TdlProfileName, TdlProfile> table = [] {
        std::map<TdlProfileName, TdlProfile> m;
        for (TdlProfile& p : parse_tdl_table(kBundledTdlTable)) {
            m.emplace(p.name, std::move(p));
        }
        return m;
    }();
    return table;
}

}  // namespace

TdlProfile make_tdl_profile(TdlProfileName name) {
    const auto& table = bundled_profiles();
    auto it = table.find(name);
    if (it == table.end())
        throw UnknownProfile("profile missing from bundled table");
    return it->second;
}

TdlProfile make_tdl_profile(std::string_view name) {
    return make_tdl_profile(tdl_profile_from_string(name));
}

}  // namespace chanest
