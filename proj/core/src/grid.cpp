#include "chanest/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "chanest/errors.hpp"

namespace chanest {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'R', 'D'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("CGRD: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

bool ComplexGrid::all_finite() const {
    for (const cd& v : data_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

void write_cgrd(std::ostream& os, const ComplexGrid& grid) {
    os.write(kMagic, 4);
    write_u32(os, static_cast<std::uint32_t>(grid.rows()));
    write_u32(os, static_cast<std::uint32_t>(grid.cols()));
    std::vector<float> buf(grid.size() * 2);
    const auto& d = grid.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        buf[2 * i] = static_cast<float>(d[i].real());
        buf[2 * i + 1] = static_cast<float>(d[i].imag());
    }
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!os) throw IoError("CGRD: write failed");
}

ComplexGrid read_cgrd(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("CGRD: bad magic");
    std::uint32_t rows = read_u32(is);
    std::uint32_t cols = read_u32(is);
    ComplexGrid grid(rows, cols);
    std::vector<float> buf(static_cast<std::size_t>(rows) * cols * 2);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw FormatError("CGRD: truncated payload");
    auto& d = grid.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = cd(buf[2 * i], buf[2 * i + 1]);
    }
    return grid;
}

void save_grid(const std::string& path, const ComplexGrid& grid) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    write_cgrd(os, grid);
}

ComplexGrid load_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for read: " + path);
    return read_cgrd(is);
}

}  // namespace chanest
