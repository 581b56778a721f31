#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace chanest {

using cd = std::complex<double>;

/// Dense complex matrix, rows = subcarriers, cols = OFDM symbols.
/// Carries resource grids, channel frequency responses and estimates.
class ComplexGrid {
public:
    ComplexGrid() = default;
    ComplexGrid(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    cd& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cd& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    cd& operator()(std::size_t r, std::size_t c) { return at(r, c); }
    const cd& operator()(std::size_t r, std::size_t c) const { return at(r, c); }

    /// Row-major backing store.
    std::vector<cd>& data() { return data_; }
    const std::vector<cd>& data() const { return data_; }

    bool same_shape(const ComplexGrid& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cd> data_;
};

/// CGRD binary record: magic "CGRD", u32 rows, u32 cols, then rows*cols
/// (real, imag) float32 pairs in row-major order (row = subcarrier,
/// column = OFDM symbol). Little-endian throughout.
void write_cgrd(std::ostream& os, const ComplexGrid& grid);

/// Reads one CGRD record. Throws FormatError on bad magic or truncation.
ComplexGrid read_cgrd(std::istream& is);

void save_grid(const std::string& path, const ComplexGrid& grid);
ComplexGrid load_grid(const std::string& path);

}  // namespace chanest
