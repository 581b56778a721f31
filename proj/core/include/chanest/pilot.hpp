#pragma once

#include <vector>

#include "chanest/grid.hpp"
#include "chanest/ofdm.hpp"

namespace chanest {

/// Least-squares channel estimates at pilot resource elements.
struct SparseEstimate {
    struct Entry {
        int subcarrier = 0;
        int symbol = 0;
        cd value;
    };
    /// Scan order: pilot symbols ascending, subcarriers ascending.
    std::vector<Entry> entries;
    std::vector<int> pilot_symbols;
    std::vector<int> pilot_subcarriers;  // comb shared by all pilot symbols
};

/// H_hat[k, m] = RX[k, m] / pilot[k, m] at every pilot RE.
SparseEstimate ls_estimate_at_pilots(const ComplexGrid& rx, const PilotConfig& pilots);

/// Bilinear completion of the sparse estimate: linear interpolation in
/// frequency within each pilot symbol, then linear in time across pilot
/// symbols; constant (nearest-edge) extrapolation outside the pilot hull.
ComplexGrid interpolate_grid(const SparseEstimate& sparse, const OfdmConfig& cfg);

/// The full traditional baseline: LS at pilots + bilinear interpolation.
ComplexGrid pilot_baseline_estimate(const ComplexGrid& rx, const PilotConfig& pilots,
                                    const OfdmConfig& cfg);

}  // namespace chanest
