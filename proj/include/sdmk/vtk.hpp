#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdmk/errors.hpp"
#include "sdmk/mesh.hpp"

// Legacy ASCII VTK (POLYDATA) for triangle meshes with attached fields.
namespace sdmk::vtk {

struct ScalarField {
    std::string name;
    std::vector<double> values;
};

struct VectorField {
    std::string name;
    std::vector<Vec3> values;
};

struct Attributes {
    std::vector<ScalarField> cell_scalars;
    std::vector<VectorField> cell_vectors;
    std::vector<ScalarField> point_scalars;
};

namespace detail {
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace detail

inline void write(std::ostream& os, const SurfaceMesh& mesh, const Attributes& attr,
                  const std::string& title = "sdmk") {
    for (const auto& f : attr.cell_scalars)
        if (f.values.size() != mesh.num_cells()) throw std::invalid_argument("cell field size: " + f.name);
    for (const auto& f : attr.cell_vectors)
        if (f.values.size() != mesh.num_cells()) throw std::invalid_argument("cell field size: " + f.name);
    for (const auto& f : attr.point_scalars)
        if (f.values.size() != mesh.num_vertices()) throw std::invalid_argument("point field size: " + f.name);

    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices())
        os << detail::fmt(p[0]) << ' ' << detail::fmt(p[1]) << ' ' << detail::fmt(p[2]) << '\n';
    os << "POLYGONS " << mesh.num_cells() << ' ' << 4 * mesh.num_cells() << '\n';
    for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';

    if (!attr.cell_scalars.empty() || !attr.cell_vectors.empty()) {
        os << "CELL_DATA " << mesh.num_cells() << '\n';
        for (const auto& f : attr.cell_scalars) {
            os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values) os << detail::fmt(v) << '\n';
        }
        for (const auto& f : attr.cell_vectors) {
            os << "VECTORS " << f.name << " double\n";
            for (const auto& v : f.values)
                os << detail::fmt(v[0]) << ' ' << detail::fmt(v[1]) << ' ' << detail::fmt(v[2]) << '\n';
        }
    }
    if (!attr.point_scalars.empty()) {
        os << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& f : attr.point_scalars) {
            os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values) os << detail::fmt(v) << '\n';
        }
    }
}

inline void write_file(const std::string& path, const SurfaceMesh& mesh, const Attributes& attr,
                       const std::string& title = "sdmk") {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    write(out, mesh, attr, title);
    if (!out) throw Error("write to " + path + " failed");
}

struct Document {
    SurfaceMesh mesh;
    Attributes attributes;
};

/// Reads what `write` produces (triangle POLYGONS, double scalars and vectors).
inline Document read(std::istream& is) {
    std::string line;
    std::getline(is, line);
    if (line.rfind("# vtk DataFile", 0) != 0) throw Error("not a legacy VTK file");
    std::getline(is, line);  // title
    std::string word;
    is >> word;
    if (word != "ASCII") throw Error("only ASCII VTK is supported");

    std::vector<Vec3> points;
    std::vector<Triangle> tris;
    Attributes attr;
    enum class Section { none, cells, points } section = Section::none;
    std::size_t count = 0;

    while (is >> word) {
        if (word == "DATASET") {
            is >> word;
            if (word != "POLYDATA") throw Error("expected POLYDATA, got " + word);
        } else if (word == "POINTS") {
            std::string type;
            is >> count >> type;
            points.resize(count);
            for (auto& p : points) is >> p[0] >> p[1] >> p[2];
        } else if (word == "POLYGONS") {
            std::size_t total = 0;
            is >> count >> total;
            tris.resize(count);
            for (auto& t : tris) {
                std::size_t k = 0;
                is >> k;
                if (k != 3) throw Error("only triangles are supported");
                is >> t[0] >> t[1] >> t[2];
            }
        } else if (word == "CELL_DATA") {
            is >> count;
            section = Section::cells;
        } else if (word == "POINT_DATA") {
            is >> count;
            section = Section::points;
        } else if (word == "SCALARS") {
            ScalarField f;
            std::string type, lut;
            is >> f.name >> type;
            std::getline(is, line);  // optional component count
            is >> lut >> word;
            if (lut != "LOOKUP_TABLE") throw Error("expected LOOKUP_TABLE");
            f.values.resize(count);
            for (auto& v : f.values) is >> v;
            (section == Section::points ? attr.point_scalars : attr.cell_scalars).push_back(std::move(f));
        } else if (word == "VECTORS") {
            VectorField f;
            std::string type;
            is >> f.name >> type;
            if (section != Section::cells) throw Error("point vectors are not supported");
            f.values.resize(count);
            for (auto& v : f.values) is >> v[0] >> v[1] >> v[2];
            attr.cell_vectors.push_back(std::move(f));
        } else {
            throw Error("unexpected VTK keyword " + word);
        }
        if (!is) throw Error("truncated VTK file");
    }
    return {SurfaceMesh(std::move(points), std::move(tris)), std::move(attr)};
}

inline Document read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read(in);
}

}  // namespace sdmk::vtk
