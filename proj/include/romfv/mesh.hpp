#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "romfv/types.hpp"

namespace romfv {

/// Unstructured 2D triangular mesh as read from disk: nodes, vertex
/// triples, optional boundary tags. Cells are normalized to
/// counter-clockwise orientation on load.
struct RawMesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> cells;
    /// Tags keyed by the sorted vertex pair of a boundary face.
    std::map<std::pair<int, int>, std::string> boundary_tags;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_cells() const { return static_cast<int>(cells.size()); }

    /// Checks index ranges, duplicate cells and degenerate (near
    /// zero-area) cells, and flips cells to counter-clockwise
    /// orientation. Throws Error on violation.
    void normalize();
};

/// Parse the plain-text `mesh2d 1` format. Errors carry the line number.
RawMesh load_mesh(const std::string& path);
void save_mesh(const RawMesh& mesh, const std::string& path);

/// RawMesh plus full connectivity. Face enumeration is deterministic:
/// faces are the sorted vertex pairs of all cell edges, ordered
/// lexicographically; the owner of a face is the adjacent cell with the
/// lower index. Mesh and MeshGeometry are immutable once built, so any
/// number of readers may share them.
struct Mesh {
    RawMesh raw;
    std::vector<std::array<int, 2>> faces;       // vertex pair, lo < hi
    std::vector<std::array<int, 2>> face_cells;  // {owner, neighbor-or-kNoCell}
    std::vector<std::array<int, 3>> cell_faces;
    std::vector<std::vector<int>> vertex_cells;  // ascending cell ids

    int n_cells() const { return raw.n_cells(); }
    int n_nodes() const { return raw.n_nodes(); }
    int n_faces() const { return static_cast<int>(faces.size()); }
    bool is_boundary_face(int f) const { return face_cells[f][1] == kNoCell; }
    int n_interior_faces() const;
    int n_boundary_faces() const { return n_faces() - n_interior_faces(); }
};

/// Derive faces, face->cell and vertex->cell adjacency. Throws on
/// non-manifold faces (shared by more than two cells).
Mesh build_connectivity(RawMesh raw);

/// Geometric quantities needed by the finite-volume assembly.
///
/// Conventions, fixed once here and relied on by the assemblers:
///   - face_tangent t points from the lower-index face vertex to the
///     higher-index one; |t| = 1.
///   - face_normal n is t rotated so that it points owner -> neighbor
///     (outward from the owner on boundary faces); |n| = 1.
///   - intercell l = centroid(neighbor) - centroid(owner); on boundary
///     faces l = face midpoint - centroid(owner).
///   - delta = l . n  (> 0 on interior faces of a valid mesh).
///   - tangent_dot = t . l.
///   - face_weight w interpolates owner-vs-neighbor values as
///     v_f = w v_owner + (1-w) v_neighbor, inverse-distance weighted by
///     the centroid-to-face-midpoint distances (w = 1 on boundary).
///   - node_weights[v][i] is the inverse-distance weight of
///     vertex_cells[v][i]; the weights of each vertex sum to one.
struct MeshGeometry {
    Mesh mesh;

    std::vector<Vec2> cell_centroids;
    std::vector<double> cell_areas;

    std::vector<double> face_areas;  // lengths in 2D
    std::vector<Vec2> face_normals;
    std::vector<Vec2> face_tangents;
    std::vector<Vec2> face_midpoints;
    std::vector<Vec2> intercell;
    std::vector<double> delta;
    std::vector<double> tangent_dot;
    std::vector<double> face_weights;
    std::vector<std::vector<double>> node_weights;

    int n_cells() const { return mesh.n_cells(); }
    int n_faces() const { return mesh.n_faces(); }
};

/// Compute all geometric quantities and verify their invariants
/// (unit/orthogonal face frames, positive interior delta, node-weight
/// partition of unity, per-cell closed-surface identity). Throws with
/// the offending face/cell id.
MeshGeometry compute_geometry(Mesh mesh);

/// Convenience: load + connectivity + geometry.
MeshGeometry load_geometry(const std::string& path);

/// Structured triangulations of the unit square used by the demos and
/// the test fixtures (this library does not do mesh generation proper).
///
/// make_crosshatch_mesh(n): n x n squares, each split into 4 triangles
/// by its center point -> 4n^2 cells, (n+1)^2 + n^2 nodes. All faces of
/// this family satisfy t . l = 0 (orthogonal mesh).
RawMesh make_crosshatch_mesh(int n);

/// make_diagonal_mesh(nx, ny): each square split into 2 triangles by the
/// same-direction diagonal -> 2 nx ny cells. Axis-aligned faces of this
/// family have t . l != 0, exercising the tangential flux.
RawMesh make_diagonal_mesh(int nx, int ny);

}  // namespace romfv
