#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chanest {

enum class TdlProfileName { TdlA, TdlB, TdlC, TdlD, TdlE };

const char* to_string(TdlProfileName name);
TdlProfileName tdl_profile_from_string(std::string_view s);  // throws UnknownProfile
std::vector<TdlProfileName> all_tdl_profiles();

struct TdlTap {
    double normalized_delay = 0.0;  // dimensionless, scaled by delay spread later
    double power_db = 0.0;          // as published, before normalization
    bool is_los = false;
};

/// Static tap table of one delay profile. Taps are sorted by delay and the
/// linear powers are normalized to unit total on construction.
struct TdlProfile {
    TdlProfileName name = TdlProfileName::TdlA;
    std::vector<TdlTap> taps;
    std::vector<double> linear_powers;  // normalized, sums to 1
    double rician_k_db = 0.0;           // meaningful only when has_los_tap()
    bool has_k_factor = false;

    bool has_los_tap() const { return !taps.empty() && taps.front().is_los; }
    std::size_t num_taps() const { return taps.size(); }
};

/// Returns the bundled 38.901 tap table for the given profile.
TdlProfile make_tdl_profile(TdlProfileName name);
TdlProfile make_tdl_profile(std::string_view name);

/// Parses the tap-table text format: one stanza per profile with lines
/// `profile <name>`, optional `k_factor_db <v>`, and `tap <delay> <power_db>
/// [los]`. '#' starts a comment. Throws FormatError on malformed input.
std::vector<TdlProfile> parse_tdl_table(std::string_view text);

/// Loads profiles from a file in the same format.
std::vector<TdlProfile> load_tdl_table(const std::string& path);

}  // namespace chanest
