#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>

#include "deauto/grid.hpp"

namespace deauto {

static_assert(std::endian::native == std::endian::little,
              "GFN1 I/O assumes a little-endian host");

/// Binary grid format: magic "GFN1", u32 dim, u32 cells,
/// dim x f64 origin, dim x f64 extent, cells^dim x f64 values row-major.
inline void write_gfn1(const GridFn& g, std::ostream& os) {
    os.write("GFN1", 4);
    std::uint32_t n = static_cast<std::uint32_t>(g.spec().dim);
    std::uint32_t m = static_cast<std::uint32_t>(g.spec().cells);
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&m), 4);
    os.write(reinterpret_cast<const char*>(g.spec().origin.data()),
             static_cast<std::streamsize>(8 * g.spec().origin.size()));
    os.write(reinterpret_cast<const char*>(g.spec().extent.data()),
             static_cast<std::streamsize>(8 * g.spec().extent.size()));
    os.write(reinterpret_cast<const char*>(g.values().data()),
             static_cast<std::streamsize>(8 * g.values().size()));
    if (!os) throw std::runtime_error("write_gfn1: write failed");
}

inline void write_gfn1(const GridFn& g, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_gfn1: cannot open " + path);
    write_gfn1(g, os);
}

inline GridFn read_gfn1(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GFN1", 4) != 0)
        throw std::runtime_error("read_gfn1: bad magic");
    std::uint32_t n = 0, m = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&m), 4);
    if (!is || n < 1 || n > 16 || m < 2)
        throw std::runtime_error("read_gfn1: bad header");
    GridSpec spec;
    spec.dim = static_cast<int>(n);
    spec.cells = static_cast<int>(m);
    spec.origin.resize(n);
    spec.extent.resize(n);
    is.read(reinterpret_cast<char*>(spec.origin.data()), 8 * n);
    is.read(reinterpret_cast<char*>(spec.extent.data()), 8 * n);
    spec.validate();
    std::vector<double> vals(spec.size());
    is.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(8 * vals.size()));
    if (!is) throw std::runtime_error("read_gfn1: truncated file");
    return GridFn(std::move(spec), std::move(vals));
}

inline GridFn read_gfn1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_gfn1: cannot open " + path);
    return read_gfn1(is);
}

/// CSV export: one line per cell, "i1,...,in,t1,...,tn,value" with t the
/// cell midpoint coordinates.
inline void write_grid_csv(const GridFn& g, std::ostream& os) {
    char buf[64];
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        std::vector<int> idx = unflatten(flat, g.spec());
        std::vector<double> t = g.midpoint(flat);
        for (int i : idx) os << i << ',';
        for (double c : t) {
            std::snprintf(buf, sizeof buf, "%.17g", c);
            os << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", g[flat]);
        os << buf << '\n';
    }
    if (!os) throw std::runtime_error("write_grid_csv: write failed");
}

inline void write_grid_csv(const GridFn& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_grid_csv: cannot open " + path);
    write_grid_csv(g, os);
}

}  // namespace deauto
