#include "romfv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace romfv {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RawMesh::normalize() {
    const int nn = n_nodes();
    if (nn < 3 || cells.empty()) fail("mesh: needs at least 3 nodes and 1 cell");

    Vec2 lo = nodes.front(), hi = nodes.front();
    for (const auto& p : nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double bbox_area = (hi.x() - lo.x()) * (hi.y() - lo.y());
    const double degenerate_tol = 1e-14 * std::max(bbox_area, std::numeric_limits<double>::min());

    std::vector<std::array<int, 3>> sorted_cells;
    sorted_cells.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& v = cells[c];
        for (int k = 0; k < 3; ++k) {
            if (v[k] < 0 || v[k] >= nn)
                fail("mesh: cell " + std::to_string(c) + " references out-of-range vertex " + std::to_string(v[k]));
        }
        if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2])
            fail("mesh: cell " + std::to_string(c) + " has repeated vertices");
        const double area = signed_area(nodes[v[0]], nodes[v[1]], nodes[v[2]]);
        if (std::abs(area) <= degenerate_tol)
            fail("mesh: cell " + std::to_string(c) + " is degenerate (area " + fmt_double(area) + ")");
        if (area < 0.0) std::swap(v[1], v[2]);  // enforce counter-clockwise

        std::array<int, 3> key = v;
        std::sort(key.begin(), key.end());
        sorted_cells.push_back(key);
    }
    std::sort(sorted_cells.begin(), sorted_cells.end());
    if (std::adjacent_find(sorted_cells.begin(), sorted_cells.end()) != sorted_cells.end())
        fail("mesh: duplicate cells");
}

RawMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("mesh: cannot open '" + path + "'");

    RawMesh mesh;
    int lineno = 0;
    std::string line;
    auto next_tokens = [&](std::vector<std::string>& tok) -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            tok.assign(std::istream_iterator<std::string>(ss), std::istream_iterator<std::string>());
            if (!tok.empty()) return true;
        }
        return false;
    };
    auto parse_fail = [&](const std::string& what) {
        fail(path + ":" + std::to_string(lineno) + ": " + what);
    };

    std::vector<std::string> tok;
    if (!next_tokens(tok) || tok.size() != 2 || tok[0] != "mesh2d" || tok[1] != "1")
        parse_fail("expected header 'mesh2d 1'");

    auto parse_count = [&](const char* section) -> int {
        if (!next_tokens(tok) || tok.size() != 2 || tok[0] != section)
            parse_fail(std::string("expected '") + section + " <count>'");
        try {
            return std::stoi(tok[1]);
        } catch (const std::exception&) {
            parse_fail(std::string("bad count in '") + section + "' header");
        }
        return 0;
    };

    const int nn = parse_count("nodes");
    if (nn <= 0) parse_fail("node count must be positive");
    mesh.nodes.reserve(nn);
    for (int i = 0; i < nn; ++i) {
        if (!next_tokens(tok) || tok.size() != 2) parse_fail("expected '<x> <y>'");
        try {
            mesh.nodes.emplace_back(std::stod(tok[0]), std::stod(tok[1]));
        } catch (const std::exception&) {
            parse_fail("bad node coordinate");
        }
    }

    const int nc = parse_count("cells");
    if (nc <= 0) parse_fail("cell count must be positive");
    mesh.cells.reserve(nc);
    for (int i = 0; i < nc; ++i) {
        if (!next_tokens(tok) || tok.size() != 3) parse_fail("expected '<v0> <v1> <v2>'");
        try {
            mesh.cells.push_back({std::stoi(tok[0]), std::stoi(tok[1]), std::stoi(tok[2])});
        } catch (const std::exception&) {
            parse_fail("bad vertex index");
        }
    }

    if (next_tokens(tok)) {
        if (tok.size() != 2 || tok[0] != "boundary") parse_fail("expected 'boundary <count>' or end of file");
        int nb = 0;
        try {
            nb = std::stoi(tok[1]);
        } catch (const std::exception&) {
            parse_fail("bad count in 'boundary' header");
        }
        for (int i = 0; i < nb; ++i) {
            if (!next_tokens(tok) || tok.size() != 3) parse_fail("expected '<va> <vb> <tag>'");
            int a = 0, b = 0;
            try {
                a = std::stoi(tok[0]);
                b = std::stoi(tok[1]);
            } catch (const std::exception&) {
                parse_fail("bad boundary vertex index");
            }
            if (a < 0 || a >= nn || b < 0 || b >= nn) parse_fail("boundary vertex out of range");
            mesh.boundary_tags[{std::min(a, b), std::max(a, b)}] = tok[2];
        }
        if (next_tokens(tok)) parse_fail("trailing content after boundary section");
    }

    mesh.normalize();
    return mesh;
}

void save_mesh(const RawMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("mesh: cannot write '" + path + "'");
    out << "mesh2d 1\n";
    out << "nodes " << mesh.n_nodes() << "\n";
    for (const auto& p : mesh.nodes) out << fmt_double(p.x()) << " " << fmt_double(p.y()) << "\n";
    out << "cells " << mesh.n_cells() << "\n";
    for (const auto& c : mesh.cells) out << c[0] << " " << c[1] << " " << c[2] << "\n";
    if (!mesh.boundary_tags.empty()) {
        out << "boundary " << mesh.boundary_tags.size() << "\n";
        for (const auto& [edge, tag] : mesh.boundary_tags)
            out << edge.first << " " << edge.second << " " << tag << "\n";
    }
    if (!out) fail("mesh: write failed for '" + path + "'");
}

int Mesh::n_interior_faces() const {
    int n = 0;
    for (const auto& fc : face_cells) n += (fc[1] != kNoCell) ? 1 : 0;
    return n;
}

Mesh build_connectivity(RawMesh raw) {
    raw.normalize();
    Mesh mesh;
    mesh.raw = std::move(raw);
    const int nc = mesh.raw.n_cells();

    // Deterministic face enumeration: collect every cell edge as a
    // sorted vertex pair and sort the unique pairs lexicographically.
    std::vector<std::array<int, 2>> edges;
    edges.reserve(static_cast<std::size_t>(nc) * 3);
    for (const auto& cell : mesh.raw.cells) {
        for (int k = 0; k < 3; ++k) {
            int a = cell[k], b = cell[(k + 1) % 3];
            edges.push_back({std::min(a, b), std::max(a, b)});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    mesh.faces = std::move(edges);

    const int nf = mesh.n_faces();
    mesh.face_cells.assign(nf, {kNoCell, kNoCell});
    mesh.cell_faces.assign(nc, {-1, -1, -1});
    mesh.vertex_cells.assign(mesh.raw.n_nodes(), {});

    auto face_id = [&](int a, int b) -> int {
        std::array<int, 2> key{std::min(a, b), std::max(a, b)};
        auto it = std::lower_bound(mesh.faces.begin(), mesh.faces.end(), key);
        return static_cast<int>(it - mesh.faces.begin());
    };

    for (int c = 0; c < nc; ++c) {
        const auto& cell = mesh.raw.cells[c];
        for (int k = 0; k < 3; ++k) {
            const int f = face_id(cell[k], cell[(k + 1) % 3]);
            mesh.cell_faces[c][k] = f;
            auto& fc = mesh.face_cells[f];
            if (fc[0] == kNoCell) {
                fc[0] = c;
            } else if (fc[1] == kNoCell) {
                fc[1] = c;  // cells are visited in ascending order, so owner < neighbor
            } else {
                fail("mesh: non-manifold face " + std::to_string(f) + " shared by more than two cells");
            }
        }
        for (int v : cell) mesh.vertex_cells[v].push_back(c);
    }
    return mesh;
}

MeshGeometry compute_geometry(Mesh mesh) {
    MeshGeometry g;
    g.mesh = std::move(mesh);
    const Mesh& m = g.mesh;
    const int nc = m.n_cells();
    const int nf = m.n_faces();

    g.cell_centroids.resize(nc);
    g.cell_areas.resize(nc);
    for (int c = 0; c < nc; ++c) {
        const auto& cell = m.raw.cells[c];
        const Vec2 &a = m.raw.nodes[cell[0]], &b = m.raw.nodes[cell[1]], &d = m.raw.nodes[cell[2]];
        g.cell_centroids[c] = (a + b + d) / 3.0;
        g.cell_areas[c] = 0.5 * ((b.x() - a.x()) * (d.y() - a.y()) - (d.x() - a.x()) * (b.y() - a.y()));
    }

    g.face_areas.resize(nf);
    g.face_normals.resize(nf);
    g.face_tangents.resize(nf);
    g.face_midpoints.resize(nf);
    g.intercell.resize(nf);
    g.delta.resize(nf);
    g.tangent_dot.resize(nf);
    g.face_weights.resize(nf);

    for (int f = 0; f < nf; ++f) {
        const Vec2& pa = m.raw.nodes[m.faces[f][0]];
        const Vec2& pb = m.raw.nodes[m.faces[f][1]];
        const double len = (pb - pa).norm();
        g.face_areas[f] = len;
        const Vec2 t = (pb - pa) / len;
        g.face_tangents[f] = t;
        g.face_midpoints[f] = 0.5 * (pa + pb);

        Vec2 n(t.y(), -t.x());
        const int owner = m.face_cells[f][0];
        const int neigh = m.face_cells[f][1];
        if (neigh != kNoCell) {
            const Vec2 l = g.cell_centroids[neigh] - g.cell_centroids[owner];
            if (n.dot(l) < 0.0) n = -n;
            g.face_normals[f] = n;
            g.intercell[f] = l;
            g.delta[f] = l.dot(n);
            g.tangent_dot[f] = t.dot(l);
            const double d0 = (g.face_midpoints[f] - g.cell_centroids[owner]).norm();
            const double d1 = (g.face_midpoints[f] - g.cell_centroids[neigh]).norm();
            g.face_weights[f] = d1 / (d0 + d1);
            if (!(g.delta[f] > 1e-14 * len))
                fail("geometry: near-degenerate cell pair across face " + std::to_string(f) +
                     " (delta " + std::to_string(g.delta[f]) + ")");
        } else {
            const Vec2 l = g.face_midpoints[f] - g.cell_centroids[owner];
            if (n.dot(l) < 0.0) n = -n;
            g.face_normals[f] = n;
            g.intercell[f] = l;
            g.delta[f] = l.dot(n);
            g.tangent_dot[f] = t.dot(l);
            g.face_weights[f] = 1.0;
        }
    }

    g.node_weights.resize(m.n_nodes());
    for (int v = 0; v < m.n_nodes(); ++v) {
        const auto& cells = m.vertex_cells[v];
        auto& w = g.node_weights[v];
        w.resize(cells.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double d = (g.cell_centroids[cells[i]] - m.raw.nodes[v]).norm();
            if (d <= 0.0) fail("geometry: cell centroid coincides with vertex " + std::to_string(v));
            w[i] = 1.0 / d;
            sum += w[i];
        }
        for (auto& wi : w) wi /= sum;
    }

    // Invariant sweep: face frames and per-cell surface closure.
    for (int f = 0; f < nf; ++f) {
        if (std::abs(g.face_normals[f].norm() - 1.0) > 1e-12 || std::abs(g.face_tangents[f].norm() - 1.0) > 1e-12 ||
            std::abs(g.face_normals[f].dot(g.face_tangents[f])) > 1e-12)
            fail("geometry: face frame not orthonormal at face " + std::to_string(f));
    }
    for (int c = 0; c < nc; ++c) {
        Vec2 closure = Vec2::Zero();
        double perimeter = 0.0;
        for (int f : m.cell_faces[c]) {
            const double sign = (m.face_cells[f][0] == c) ? 1.0 : -1.0;
            closure += sign * g.face_areas[f] * g.face_normals[f];
            perimeter += g.face_areas[f];
        }
        if (closure.norm() > 1e-12 * perimeter)
            fail("geometry: open surface on cell " + std::to_string(c));
    }
    return g;
}

MeshGeometry load_geometry(const std::string& path) {
    return compute_geometry(build_connectivity(load_mesh(path)));
}

RawMesh make_crosshatch_mesh(int n) {
    if (n < 1) fail("make_crosshatch_mesh: n must be >= 1");
    RawMesh mesh;
    const double h = 1.0 / n;
    // Grid corners first, then square centers.
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) mesh.nodes.emplace_back(i * h, j * h);
    const int center0 = (n + 1) * (n + 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) mesh.nodes.emplace_back((i + 0.5) * h, (j + 0.5) * h);

    auto corner = [&](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int c = center0 + j * n + i;
            const int sw = corner(i, j), se = corner(i + 1, j);
            const int ne = corner(i + 1, j + 1), nw = corner(i, j + 1);
            mesh.cells.push_back({sw, se, c});  // south
            mesh.cells.push_back({se, ne, c});  // east
            mesh.cells.push_back({ne, nw, c});  // north
            mesh.cells.push_back({nw, sw, c});  // west
        }
    }
    mesh.normalize();
    return mesh;
}

RawMesh make_diagonal_mesh(int nx, int ny) {
    if (nx < 1 || ny < 1) fail("make_diagonal_mesh: counts must be >= 1");
    RawMesh mesh;
    const double hx = 1.0 / nx, hy = 1.0 / ny;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) mesh.nodes.emplace_back(i * hx, j * hy);
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int sw = id(i, j), se = id(i + 1, j), ne = id(i + 1, j + 1), nw = id(i, j + 1);
            mesh.cells.push_back({sw, se, ne});
            mesh.cells.push_back({sw, ne, nw});
        }
    }
    mesh.normalize();
    return mesh;
}

}  // namespace romfv
