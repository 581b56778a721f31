#include "chanest/pilot.hpp"

#include <algorithm>

#include "chanest/errors.hpp"

namespace chanest {

SparseEstimate ls_estimate_at_pilots(const ComplexGrid& rx, const PilotConfig& pilots) {
    SparseEstimate est;
    est.pilot_symbols = pilots.pilot_symbol_indices;

    for (int k = pilots.subcarrier_offset; k < static_cast<int>(rx.rows());
         k += pilots.subcarrier_stride)
        est.pilot_subcarriers.push_back(k);

    std::size_t idx = 0;
    for (int m : est.pilot_symbols) {
        if (m < 0 || m >= static_cast<int>(rx.cols()))
            throw ShapeMismatch("ls_estimate: pilot symbol outside grid");
        for (int k : est.pilot_subcarriers) {
            cd pilot = pilots.pilot_values[idx++];
            if (pilot == cd(0.0, 0.0))
                throw DivisionByZero("ls_estimate: zero pilot value");
            est.entries.push_back({k, m, rx(k, m) / pilot});
        }
    }
    return est;
}

ComplexGrid interpolate_grid(const SparseEstimate& sparse, const OfdmConfig& cfg) {
    if (sparse.entries.empty())
        throw InvalidParameter("interpolate_grid: empty sparse estimate");
    if (sparse.pilot_symbols.size() < 2)
        throw InvalidParameter("interpolate_grid: need at least 2 pilot symbols");
    if (sparse.pilot_subcarriers.empty())
        throw InvalidParameter("interpolate_grid: no pilot subcarriers");
    if (sparse.entries.size() !=
        sparse.pilot_symbols.size() * sparse.pilot_subcarriers.size())
        throw InvalidParameter("interpolate_grid: entries do not fill the pilot lattice");

    const int n_sc = cfg.num_subcarriers;
    const int n_sym = cfg.symbols_per_slot;
    const auto& pk = sparse.pilot_subcarriers;
    const auto& pm = sparse.pilot_symbols;

    // Frequency interpolation within each pilot symbol: linear between
    // adjacent pilots, constant beyond the edge pilots.
    std::vector<std::vector<cd>> columns(pm.size(), std::vector<cd>(n_sc));
    for (std::size_t c = 0; c < pm.size(); ++c) {
        auto value_at = [&](std::size_t i) {
            return sparse.entries[c * pk.size() + i].value;
        };
        std::size_t seg = 0;
        for (int k = 0; k < n_sc; ++k) {
            if (k <= pk.front()) {
                columns[c][k] = value_at(0);
            } else if (k >= pk.back()) {
                columns[c][k] = value_at(pk.size() - 1);
            } else {
                while (pk[seg + 1] < k) ++seg;
                double t = static_cast<double>(k - pk[seg]) /
                           static_cast<double>(pk[seg + 1] - pk[seg]);
                columns[c][k] = (1.0 - t) * value_at(seg) + t * value_at(seg + 1);
            }
        }
    }

    // Time interpolation per subcarrier: linear between pilot symbols,
    // constant outside.
    ComplexGrid grid(n_sc, n_sym);
    std::size_t seg = 0;
    for (int m = 0; m < n_sym; ++m) {
        if (m <= pm.front()) {
            for (int k = 0; k < n_sc; ++k) grid(k, m) = columns.front()[k];
        } else if (m >= pm.back()) {
            for (int k = 0; k < n_sc; ++k) grid(k, m) = columns.back()[k];
        } else {
            while (pm[seg + 1] < m) ++seg;
            double t = static_cast<double>(m - pm[seg]) /
                       static_cast<double>(pm[seg + 1] - pm[seg]);
            for (int k = 0; k < n_sc; ++k)
                grid(k, m) = (1.0 - t) * columns[seg][k] + t * columns[seg + 1][k];
        }
    }
    return grid;
}

ComplexGrid pilot_baseline_estimate(const ComplexGrid& rx, const PilotConfig& pilots,
                                    const OfdmConfig& cfg) {
    return interpolate_grid(ls_estimate_at_pilots(rx, pilots), cfg);
}

}  // namespace chanest
