#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/measures.hpp"

namespace fpklab {

/// Scientific notation with 17 significant digits, the stable on-disk format.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string grid_comment(const GridSpec& g) {
    std::ostringstream ss;
    ss << "# grid dim=" << g.dim << " lower=" << fmt17(g.lower[0]);
    if (g.dim == 2) ss << "," << fmt17(g.lower[1]);
    ss << " upper=" << fmt17(g.upper[0]);
    if (g.dim == 2) ss << "," << fmt17(g.upper[1]);
    ss << " cells=" << g.cells[0];
    if (g.dim == 2) ss << "," << g.cells[1];
    return ss.str();
}

/// Density table as CSV: a grid comment line, a "x[,y],rho" header, then one
/// row per cell in row-major order.
inline std::string density_csv(const DensityField& f) {
    std::ostringstream ss;
    ss << grid_comment(f.grid) << "\n";
    ss << (f.grid.dim == 1 ? "x,rho" : "x,y,rho") << "\n";
    for (int i = 0; i < f.grid.size(); ++i) {
        const Point p = f.grid.cell_center(i);
        ss << fmt17(p[0]);
        if (f.grid.dim == 2) ss << "," << fmt17(p[1]);
        ss << "," << fmt17(f.values[i]) << "\n";
    }
    return ss.str();
}

inline void write_density_csv(const std::string& path, const DensityField& f) {
    write_text_file(path, density_csv(f));
}

inline DensityField read_density_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open for reading: " + path);
    std::string line;
    GridSpec g;
    bool have_grid = false;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line);
            std::string tok;
            ss >> tok;  // '#'
            ss >> tok;  // 'grid'
            int dim = 0;
            std::array<double, 2> lo{}, hi{};
            std::array<int, 2> cells{0, 1};
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
                auto split2 = [&](const std::string& s, double& a, double& b) {
                    const auto c = s.find(',');
                    a = std::stod(s.substr(0, c));
                    if (c != std::string::npos) b = std::stod(s.substr(c + 1));
                };
                if (k == "dim") dim = std::stoi(v);
                if (k == "lower") split2(v, lo[0], lo[1]);
                if (k == "upper") split2(v, hi[0], hi[1]);
                if (k == "cells") {
                    double a = 0, b = 1;
                    split2(v, a, b);
                    cells = {static_cast<int>(a), static_cast<int>(b)};
                }
            }
            if (dim == 1)
                g = GridSpec::make_1d(lo[0], hi[0], cells[0]);
            else
                g = GridSpec::make_2d(lo[0], hi[0], cells[0], lo[1], hi[1], cells[1]);
            have_grid = true;
            continue;
        }
        if (line[0] == 'x') continue;  // header
        const auto last = line.rfind(',');
        vals.push_back(std::stod(line.substr(last + 1)));
    }
    if (!have_grid) throw Error("density csv without grid comment: " + path);
    if (static_cast<int>(vals.size()) != g.size())
        throw Error("density csv: expected " + std::to_string(g.size()) + " rows, got " +
                    std::to_string(vals.size()));
    DensityField f(g);
    f.values = std::move(vals);
    return f;
}

inline std::string series_csv(const std::string& tname, const std::string& vname, const std::vector<double>& t,
                              const std::vector<double>& v) {
    if (t.size() != v.size()) throw Error("series_csv: length mismatch");
    std::ostringstream ss;
    ss << tname << "," << vname << "\n";
    for (size_t i = 0; i < t.size(); ++i) ss << fmt17(t[i]) << "," << fmt17(v[i]) << "\n";
    return ss.str();
}

inline void write_series_csv(const std::string& path, const std::string& tname, const std::string& vname,
                             const std::vector<double>& t, const std::vector<double>& v) {
    write_text_file(path, series_csv(tname, vname, t, v));
}

/// Ensemble snapshot CSV: "id,x[,y]".
inline std::string ensemble_csv(const std::vector<double>& frame, int dim) {
    std::ostringstream ss;
    ss << (dim == 1 ? "id,x" : "id,x,y") << "\n";
    const int n = static_cast<int>(frame.size()) / dim;
    for (int i = 0; i < n; ++i) {
        ss << i << "," << fmt17(frame[static_cast<size_t>(i) * dim]);
        if (dim == 2) ss << "," << fmt17(frame[static_cast<size_t>(i) * dim + 1]);
        ss << "\n";
    }
    return ss.str();
}

/// CRC-32 (IEEE) of a byte string, for the output manifest.
inline uint32_t crc32(const std::string& data) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t c = 0xFFFFFFFFu;
    for (unsigned char ch : data) c = table[(c ^ ch) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

}  // namespace fpklab
