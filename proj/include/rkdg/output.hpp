#pragma once

// Plain-file output: VTK legacy ASCII (version 3.0) unstructured grids for
// 2d runs (one quad per leaf) and 1d runs (one line segment per leaf), and
// a sorted CSV of cell means for 1d post-processing. Writers are pure
// functions of (solution, aux fields): identical inputs give identical
// bytes.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "rkdg/function.hpp"
#include "rkdg/mesh.hpp"

namespace rkdg {

inline std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Leaf cells as VTK_QUAD (2d) or VTK_LINE (1d); cell means per component,
/// optional indicator and refinement level as cell data, optional
/// corner-evaluated point data.
inline void write_vtk(const DiscreteFunction& u, const std::string& path,
                      const std::vector<double>* indicator = nullptr, bool point_data = false) {
    const Mesh& mesh = u.mesh();
    const int n = mesh.num_leaves();
    const int d = mesh.dim();
    const int corners = d == 1 ? 2 : 4;
    std::ofstream out(path);
    if (!out) throw Error("cannot write VTK file: " + path);

    out << "# vtk DataFile Version 3.0\n";
    out << "rkdg solution\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n * corners << " double\n";
    for (int e = 0; e < n; ++e) {
        const CellGeometry& g = mesh.geometry(e);
        double x0 = g.lower[0], x1 = g.lower[0] + g.widths[0];
        if (d == 1) {
            out << format_g(x0) << " 0 0\n" << format_g(x1) << " 0 0\n";
        } else {
            double y0 = g.lower[1], y1 = g.lower[1] + g.widths[1];
            out << format_g(x0) << ' ' << format_g(y0) << " 0\n";
            out << format_g(x1) << ' ' << format_g(y0) << " 0\n";
            out << format_g(x1) << ' ' << format_g(y1) << " 0\n";
            out << format_g(x0) << ' ' << format_g(y1) << " 0\n";
        }
    }
    out << "CELLS " << n << ' ' << n * (corners + 1) << '\n';
    for (int e = 0; e < n; ++e) {
        out << corners;
        for (int c = 0; c < corners; ++c) out << ' ' << e * corners + c;
        out << '\n';
    }
    out << "CELL_TYPES " << n << '\n';
    for (int e = 0; e < n; ++e) out << (d == 1 ? 3 : 9) << '\n';

    out << "CELL_DATA " << n << '\n';
    for (int c = 0; c < u.components(); ++c) {
        out << "SCALARS u" << c << " double 1\nLOOKUP_TABLE default\n";
        for (int e = 0; e < n; ++e) out << format_g(u.cell_mean(e)[c]) << '\n';
    }
    if (indicator) {
        out << "SCALARS indicator double 1\nLOOKUP_TABLE default\n";
        for (int e = 0; e < n; ++e) out << format_g((*indicator)[e]) << '\n';
    }
    out << "SCALARS level int 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < n; ++e) out << mesh.level(e) << '\n';

    if (point_data) {
        out << "POINT_DATA " << n * corners << '\n';
        for (int c = 0; c < u.components(); ++c) {
            out << "SCALARS u" << c << "_corner double 1\nLOOKUP_TABLE default\n";
            for (int e = 0; e < n; ++e) {
                static const Point ref1[2] = {{0, 0}, {1, 0}};
                static const Point ref2[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
                for (int j = 0; j < corners; ++j) {
                    Point xi = d == 1 ? ref1[j] : ref2[j];
                    out << format_g(u.evaluate(e, xi)[c]) << '\n';
                }
            }
        }
    }
    if (!out) throw Error("failed while writing VTK file: " + path);
}

/// x, per-component cell means; rows sorted by cell center.
inline void write_csv_1d(const DiscreteFunction& u, const std::string& path) {
    const Mesh& mesh = u.mesh();
    if (mesh.dim() != 1) throw Error("write_csv_1d expects a 1d mesh");
    const int n = mesh.num_leaves();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return mesh.geometry(a).center[0] < mesh.geometry(b).center[0];
    });
    std::ofstream out(path);
    if (!out) throw Error("cannot write CSV file: " + path);
    out << "x";
    for (int c = 0; c < u.components(); ++c) out << ",u" << c;
    out << '\n';
    for (int e : order) {
        out << format_g(mesh.geometry(e).center[0]);
        StateVec mean = u.cell_mean(e);
        for (int c = 0; c < u.components(); ++c) out << ',' << format_g(mean[c]);
        out << '\n';
    }
    if (!out) throw Error("failed while writing CSV file: " + path);
}

}  // namespace rkdg
