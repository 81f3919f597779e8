#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "femrbf/types.hpp"

namespace femrbf {

struct NonConformingSpacing : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SeparationUnsatisfiable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateCloud : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotOnBoundary : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NormalAmbiguous : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class DomainShape { UnitSquare, LShape, BiUnitSquare };
enum class NodeTag { Interior, Dirichlet, Neumann };
enum class BoundaryKind { Dirichlet, Neumann };

constexpr double kGeomTol = 1e-12;

/// One straight piece of the boundary, oriented counterclockwise around the
/// domain. The include flags control which endpoints belong to the segment
/// for node tagging (the geometry still covers the boundary exactly once).
struct BoundarySegment {
    Point2 a, b;
    BoundaryKind kind = BoundaryKind::Dirichlet;
    bool include_a = true;
    bool include_b = true;

    double length() const { return dist(a, b); }

    /// Outward unit normal (CCW boundary: rotate direction by -90 degrees).
    Point2 outward_normal() const {
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len = std::hypot(dx, dy);
        return {dy / len, -dx / len};
    }

    /// Geometric containment, endpoints included.
    bool contains(const Point2& p, double tol = kGeomTol) const {
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        const double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
        if (t < -tol || t > 1.0 + tol) return false;
        const double px = a.x + t * dx, py = a.y + t * dy;
        return std::hypot(p.x - px, p.y - py) <= tol;
    }

    /// Containment honoring the endpoint include flags (used for tagging).
    bool owns(const Point2& p, double tol = kGeomTol) const {
        if (!contains(p, tol)) return false;
        if (!include_a && dist(p, a) <= tol) return false;
        if (!include_b && dist(p, b) <= tol) return false;
        return true;
    }
};

struct DomainSpec {
    DomainShape shape = DomainShape::UnitSquare;
    std::vector<BoundarySegment> segments;

    double xmin() const { return shape == DomainShape::BiUnitSquare ? -1.0 : 0.0; }
    double ymin() const { return xmin(); }
    double xmax() const { return 1.0; }
    double ymax() const { return 1.0; }
    double area() const {
        switch (shape) {
            case DomainShape::UnitSquare: return 1.0;
            case DomainShape::LShape: return 0.75;
            case DomainShape::BiUnitSquare: return 4.0;
        }
        return 0.0;
    }

    bool in_cutout(const Point2& p, double tol = kGeomTol) const {
        return shape == DomainShape::LShape && p.x > 0.5 + tol && p.y > 0.5 + tol;
    }

    /// Strictly inside the open domain.
    bool inside(const Point2& p, double tol = kGeomTol) const {
        if (p.x <= xmin() + tol || p.x >= xmax() - tol || p.y <= ymin() + tol ||
            p.y >= ymax() - tol)
            return false;
        if (shape == DomainShape::LShape && p.x >= 0.5 - tol && p.y >= 0.5 - tol)
            return false;
        return true;
    }

    bool inside_or_boundary(const Point2& p, double tol = kGeomTol) const {
        if (p.x < xmin() - tol || p.x > xmax() + tol || p.y < ymin() - tol ||
            p.y > ymax() + tol)
            return false;
        return !in_cutout(p, tol);
    }

    bool on_boundary(const Point2& p, double tol = kGeomTol) const {
        for (const auto& s : segments)
            if (s.contains(p, tol)) return true;
        return false;
    }

    /// Interior / Dirichlet / Neumann. Dirichlet wins when a node is owned by
    /// segments of both kinds.
    NodeTag tag(const Point2& p, double tol = kGeomTol) const {
        bool dir = false, neu = false;
        for (const auto& s : segments) {
            if (!s.owns(p, tol)) continue;
            (s.kind == BoundaryKind::Dirichlet ? dir : neu) = true;
        }
        if (dir) return NodeTag::Dirichlet;
        if (neu) return NodeTag::Neumann;
        return NodeTag::Interior;
    }

    // ---- presets for the benchmark domains ----

    static DomainSpec unit_square_dirichlet() {
        DomainSpec d;
        d.shape = DomainShape::UnitSquare;
        d.segments = {{{0, 0}, {1, 0}, BoundaryKind::Dirichlet},
                      {{1, 0}, {1, 1}, BoundaryKind::Dirichlet},
                      {{1, 1}, {0, 1}, BoundaryKind::Dirichlet},
                      {{0, 1}, {0, 0}, BoundaryKind::Dirichlet}};
        return d;
    }

    static DomainSpec bi_unit_square_dirichlet() {
        DomainSpec d;
        d.shape = DomainShape::BiUnitSquare;
        d.segments = {{{-1, -1}, {1, -1}, BoundaryKind::Dirichlet},
                      {{1, -1}, {1, 1}, BoundaryKind::Dirichlet},
                      {{1, 1}, {-1, 1}, BoundaryKind::Dirichlet},
                      {{-1, 1}, {-1, -1}, BoundaryKind::Dirichlet}};
        return d;
    }

    /// L-shape with Dirichlet data on {x=0} and {y=0} and Neumann data on the
    /// remaining four edges. The Dirichlet segments are half-open at (1,0) and
    /// (0,1), so those corners carry Neumann rows; this reproduces the node
    /// split 7/9 (dh=1/4) and 15/17 (dh=1/8) of the reference tables.
    static DomainSpec lshape_mixed() {
        DomainSpec d;
        d.shape = DomainShape::LShape;
        d.segments = {
            {{0, 0}, {1, 0}, BoundaryKind::Dirichlet, true, false},    // bottom
            {{1, 0}, {1, 0.5}, BoundaryKind::Neumann},                 // right
            {{1, 0.5}, {0.5, 0.5}, BoundaryKind::Neumann},             // inner horizontal
            {{0.5, 0.5}, {0.5, 1}, BoundaryKind::Neumann},             // inner vertical
            {{0.5, 1}, {0, 1}, BoundaryKind::Neumann},                 // top
            {{0, 1}, {0, 0}, BoundaryKind::Dirichlet, false, true},    // left
        };
        return d;
    }

    /// L-shape with a natural (do-nothing) segment on the right edge x=1 and
    /// Dirichlet velocity elsewhere; the segment corners stay Dirichlet.
    static DomainSpec lshape_natural_right() {
        DomainSpec d;
        d.shape = DomainShape::LShape;
        d.segments = {
            {{0, 0}, {1, 0}, BoundaryKind::Dirichlet},
            {{1, 0}, {1, 0.5}, BoundaryKind::Neumann, false, false},
            {{1, 0.5}, {0.5, 0.5}, BoundaryKind::Dirichlet},
            {{0.5, 0.5}, {0.5, 1}, BoundaryKind::Dirichlet},
            {{0.5, 1}, {0, 1}, BoundaryKind::Dirichlet},
            {{0, 1}, {0, 0}, BoundaryKind::Dirichlet},
        };
        return d;
    }
};

/// Outward unit normal of the unique boundary segment through p.
/// Corner points are rejected as ambiguous.
inline Point2 boundary_normal(const DomainSpec& domain, const Point2& p,
                              double tol = kGeomTol) {
    const BoundarySegment* hit = nullptr;
    int hits = 0;
    for (const auto& s : domain.segments) {
        if (s.contains(p, tol)) {
            ++hits;
            hit = &s;
        }
    }
    if (hits == 0) throw NotOnBoundary("point is not on the domain boundary");
    if (hits > 1) throw NormalAmbiguous("normal requested at a corner point");
    return hit->outward_normal();
}

/// Normal used for Neumann collocation rows: the owning Neumann segment's
/// normal, or the normalized average when the node sits on two Neumann
/// segments (re-entrant and convex corners of the L-shape).
inline Point2 neumann_normal(const DomainSpec& domain, const Point2& p,
                             double tol = kGeomTol) {
    double nx = 0.0, ny = 0.0;
    int hits = 0;
    for (const auto& s : domain.segments) {
        if (s.kind != BoundaryKind::Neumann || !s.owns(p, tol)) continue;
        const Point2 n = s.outward_normal();
        nx += n.x;
        ny += n.y;
        ++hits;
    }
    if (hits == 0) throw NotOnBoundary("point is not on a Neumann segment");
    const double len = std::hypot(nx, ny);
    return {nx / len, ny / len};
}

/// Triangulation. Vertex nodes come first; order-2 meshes append edge
/// midpoints. Triangles store [v0,v1,v2,m01,m12,m20] (midpoints -1 for
/// order 1) and are positively oriented.
struct TriMesh {
    int order = 1;
    std::vector<Point2> nodes;
    int n_vertex_nodes = 0;
    std::vector<std::array<int, 6>> triangles;
    std::vector<NodeTag> tags;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_elements() const { return static_cast<int>(triangles.size()); }
    int nodes_per_element() const { return order == 1 ? 3 : 6; }

    int count(NodeTag t) const {
        return static_cast<int>(std::count(tags.begin(), tags.end(), t));
    }

    double triangle_area(int e) const {
        const auto& t = triangles[e];
        const Point2 &p0 = nodes[t[0]], &p1 = nodes[t[1]], &p2 = nodes[t[2]];
        return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
    }

    double total_area() const {
        double s = 0.0;
        for (int e = 0; e < n_elements(); ++e) s += triangle_area(e);
        return s;
    }
};

namespace detail {

inline int checked_divisions(double length, double dh, const char* what) {
    const double q = length / dh;
    const int n = static_cast<int>(std::llround(q));
    if (n < 1 || std::abs(q - n) > 1e-9 * std::max(1.0, q))
        throw NonConformingSpacing(std::string(what) + ": spacing does not tile the domain");
    return n;
}

struct PointKey {
    std::int64_t x, y;
    bool operator==(const PointKey& o) const { return x == o.x && y == o.y; }
};
struct PointKeyHash {
    std::size_t operator()(const PointKey& k) const {
        return std::hash<std::int64_t>()(k.x) ^ (std::hash<std::int64_t>()(k.y) << 1);
    }
};
inline PointKey key_of(const Point2& p) {
    std::int64_t kx, ky;
    std::memcpy(&kx, &p.x, sizeof kx);
    std::memcpy(&ky, &p.y, sizeof ky);
    return {kx, ky};
}

}  // namespace detail

/// Structured triangulation: every dh x dh cell split along the lower-left to
/// upper-right diagonal. Order-2 meshes add edge midpoints after the vertices.
inline TriMesh build_structured_mesh(const DomainSpec& domain, double dh, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("mesh order must be 1 or 2");
    const int nx = detail::checked_divisions(domain.xmax() - domain.xmin(), dh, "x");
    const int ny = detail::checked_divisions(domain.ymax() - domain.ymin(), dh, "y");
    if (domain.shape == DomainShape::LShape)
        detail::checked_divisions(0.5, dh, "L-shape cut");

    TriMesh mesh;
    mesh.order = order;

    // vertices, lexicographic (x fast, y slow), skipping cut-out grid points
    std::map<std::pair<int, int>, int> vid;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const Point2 p{domain.xmin() + i * dh, domain.ymin() + j * dh};
            if (domain.in_cutout(p)) continue;
            vid[{i, j}] = static_cast<int>(mesh.nodes.size());
            mesh.nodes.push_back(p);
        }
    }
    mesh.n_vertex_nodes = static_cast<int>(mesh.nodes.size());

    std::map<std::pair<int, int>, int> midpoint;
    auto mid_node = [&](int na, int nb) {
        const auto key = std::minmax(na, nb);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back({0.5 * (mesh.nodes[na].x + mesh.nodes[nb].x),
                              0.5 * (mesh.nodes[na].y + mesh.nodes[nb].y)});
        midpoint.emplace(key, id);
        return id;
    };

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Point2 center{domain.xmin() + (i + 0.5) * dh, domain.ymin() + (j + 0.5) * dh};
            if (domain.in_cutout(center)) continue;
            const int a = vid.at({i, j}), b = vid.at({i + 1, j});
            const int c = vid.at({i + 1, j + 1}), d = vid.at({i, j + 1});
            for (const auto& t : {std::array<int, 3>{a, b, c}, std::array<int, 3>{a, c, d}}) {
                std::array<int, 6> elem{t[0], t[1], t[2], -1, -1, -1};
                if (order == 2) {
                    elem[3] = mid_node(t[0], t[1]);
                    elem[4] = mid_node(t[1], t[2]);
                    elem[5] = mid_node(t[2], t[0]);
                }
                mesh.triangles.push_back(elem);
            }
        }
    }

    mesh.tags.reserve(mesh.nodes.size());
    for (const auto& p : mesh.nodes) mesh.tags.push_back(domain.tag(p));
    return mesh;
}

struct RandomCloudConfig {
    std::uint64_t seed = 1;
    double min_separation = -1.0;  // default 0.25 * dh
};

/// Collocation node set, stored as [dirichlet | neumann | interior] to match
/// the Kansa row-block ordering.
struct NodeCloud {
    std::vector<Point2> points;
    int n_dirichlet = 0;
    int n_neumann = 0;
    int n_interior = 0;

    // provenance, used to rebuild structured imaginary elements
    std::optional<DomainSpec> source_domain;
    double dh = 0.0;
    bool uniform = false;

    int total() const { return static_cast<int>(points.size()); }

    NodeTag tag_of(int i) const {
        if (i < n_dirichlet) return NodeTag::Dirichlet;
        if (i < n_dirichlet + n_neumann) return NodeTag::Neumann;
        return NodeTag::Interior;
    }
};

/// Uniform cloud: the order-1 structured mesh nodes regrouped by tag.
inline NodeCloud build_node_cloud(const DomainSpec& domain, double dh) {
    const TriMesh mesh = build_structured_mesh(domain, dh, 1);
    NodeCloud cloud;
    for (NodeTag want : {NodeTag::Dirichlet, NodeTag::Neumann, NodeTag::Interior}) {
        for (int i = 0; i < mesh.n_nodes(); ++i)
            if (mesh.tags[i] == want) cloud.points.push_back(mesh.nodes[i]);
    }
    cloud.n_dirichlet = mesh.count(NodeTag::Dirichlet);
    cloud.n_neumann = mesh.count(NodeTag::Neumann);
    cloud.n_interior = mesh.count(NodeTag::Interior);
    cloud.source_domain = domain;
    cloud.dh = dh;
    cloud.uniform = true;
    return cloud;
}

/// Same boundary points as the uniform cloud; interior points redrawn
/// uniformly inside the domain with rejection sampling under min_separation.
inline NodeCloud build_random_cloud(const DomainSpec& domain, double dh,
                                    const RandomCloudConfig& cfg) {
    NodeCloud cloud = build_node_cloud(domain, dh);
    const int want = cloud.n_interior;
    const double min_sep = cfg.min_separation > 0.0 ? cfg.min_separation : 0.25 * dh;

    std::vector<Point2> accepted;
    accepted.reserve(want);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> ux(domain.xmin(), domain.xmax());
    std::uniform_real_distribution<double> uy(domain.ymin(), domain.ymax());

    const int n_boundary = cloud.n_dirichlet + cloud.n_neumann;
    std::int64_t attempts = 0;
    while (static_cast<int>(accepted.size()) < want) {
        if (++attempts > 1'000'000)
            throw SeparationUnsatisfiable("rejection sampling budget exhausted");
        const Point2 p{ux(rng), uy(rng)};
        if (!domain.inside(p, 1e-9)) continue;
        bool ok = true;
        for (int i = 0; ok && i < n_boundary; ++i)
            ok = dist(p, cloud.points[i]) >= min_sep;
        for (const auto& q : accepted) {
            if (!ok) break;
            ok = dist(p, q) >= min_sep;
        }
        if (ok) accepted.push_back(p);
    }
    std::copy(accepted.begin(), accepted.end(), cloud.points.begin() + n_boundary);
    cloud.uniform = false;
    return cloud;
}

namespace detail {

// Bowyer-Watson Delaunay triangulation; O(n^2), fine at benchmark scales.
inline std::vector<std::array<int, 3>> delaunay(const std::vector<Point2>& pts) {
    const int n = static_cast<int>(pts.size());
    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (const auto& p : pts) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1.0});
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);

    std::vector<Point2> v = pts;
    v.push_back({cx - 30.0 * span, cy - 10.0 * span});
    v.push_back({cx + 30.0 * span, cy - 10.0 * span});
    v.push_back({cx, cy + 30.0 * span});

    auto orient = [&](int a, int b, int c) {
        return (v[b].x - v[a].x) * (v[c].y - v[a].y) -
               (v[c].x - v[a].x) * (v[b].y - v[a].y);
    };
    auto in_circumcircle = [&](const std::array<int, 3>& t, int p) {
        // assumes CCW triangle; positive determinant means p is inside
        const double ax = v[t[0]].x - v[p].x, ay = v[t[0]].y - v[p].y;
        const double bx = v[t[1]].x - v[p].x, by = v[t[1]].y - v[p].y;
        const double cx2 = v[t[2]].x - v[p].x, cy2 = v[t[2]].y - v[p].y;
        const double det = (ax * ax + ay * ay) * (bx * cy2 - cx2 * by) -
                           (bx * bx + by * by) * (ax * cy2 - cx2 * ay) +
                           (cx2 * cx2 + cy2 * cy2) * (ax * by - bx * ay);
        return det > 0.0;
    };

    std::vector<std::array<int, 3>> tris{{n, n + 1, n + 2}};
    for (int p = 0; p < n; ++p) {
        std::vector<std::array<int, 3>> bad, keep;
        for (const auto& t : tris)
            (in_circumcircle(t, p) ? bad : keep).push_back(t);
        // polygon hole boundary: edges of bad triangles not shared by two of them
        std::map<std::pair<int, int>, int> edge_count;
        for (const auto& t : bad) {
            for (int e = 0; e < 3; ++e) {
                auto key = std::minmax(t[e], t[(e + 1) % 3]);
                edge_count[key]++;
            }
        }
        tris = std::move(keep);
        for (const auto& t : bad) {
            for (int e = 0; e < 3; ++e) {
                const int a = t[e], b = t[(e + 1) % 3];
                if (edge_count[std::minmax(a, b)] != 1) continue;
                std::array<int, 3> nt{a, b, p};
                if (orient(nt[0], nt[1], nt[2]) < 0.0) std::swap(nt[1], nt[2]);
                tris.push_back(nt);
            }
        }
    }
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris)
        if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
    return out;
}

// Consecutive cloud points along each boundary segment; these polyline pieces
// are enforced as triangulation edges so the boundary is never crossed.
inline std::vector<std::pair<int, int>> boundary_constraints(const DomainSpec& domain,
                                                             const std::vector<Point2>& pts) {
    std::vector<std::pair<int, int>> constraints;
    for (const auto& seg : domain.segments) {
        std::vector<std::pair<double, int>> along;
        const double dx = seg.b.x - seg.a.x, dy = seg.b.y - seg.a.y;
        for (int i = 0; i < static_cast<int>(pts.size()); ++i)
            if (seg.contains(pts[i]))
                along.emplace_back((pts[i].x - seg.a.x) * dx + (pts[i].y - seg.a.y) * dy, i);
        std::sort(along.begin(), along.end());
        for (std::size_t k = 1; k < along.size(); ++k)
            constraints.emplace_back(along[k - 1].second, along[k].second);
    }
    return constraints;
}

// Constraint enforcement by edge flips (Sloan's scheme): any edge properly
// crossing a constraint segment gets flipped until the constraint is an edge
// of the triangulation.
inline void enforce_constraints(const std::vector<Point2>& pts,
                                std::vector<std::array<int, 3>>& tris,
                                const std::vector<std::pair<int, int>>& constraints) {
    auto orient = [&](int a, int b, int c) {
        return (pts[b].x - pts[a].x) * (pts[c].y - pts[a].y) -
               (pts[c].x - pts[a].x) * (pts[b].y - pts[a].y);
    };
    auto properly_cross = [&](int a, int b, int p, int q) {
        if (a == p || a == q || b == p || b == q) return false;
        return orient(a, b, p) * orient(a, b, q) < 0.0 &&
               orient(p, q, a) * orient(p, q, b) < 0.0;
    };
    for (const auto& [ca, cb] : constraints) {
        for (int pass = 0; pass < 10000; ++pass) {
            std::map<std::pair<int, int>, std::vector<int>> edges;
            for (int t = 0; t < static_cast<int>(tris.size()); ++t)
                for (int e = 0; e < 3; ++e)
                    edges[std::minmax(tris[t][e], tris[t][(e + 1) % 3])].push_back(t);
            bool any_crossing = false, flipped = false;
            for (const auto& [edge, owners] : edges) {
                if (!properly_cross(ca, cb, edge.first, edge.second)) continue;
                any_crossing = true;
                if (owners.size() != 2) continue;
                auto opposite = [&](int t) {
                    for (int v : tris[t])
                        if (v != edge.first && v != edge.second) return v;
                    return -1;
                };
                const int a = opposite(owners[0]), b = opposite(owners[1]);
                // flip only when the quad diagonals cross (convex quad)
                if (orient(edge.first, edge.second, a) * orient(edge.first, edge.second, b) >= 0.0)
                    continue;
                if (orient(a, b, edge.first) * orient(a, b, edge.second) >= 0.0) continue;
                std::array<int, 3> t1{a, b, edge.first};
                std::array<int, 3> t2{a, b, edge.second};
                if (orient(t1[0], t1[1], t1[2]) < 0.0) std::swap(t1[1], t1[2]);
                if (orient(t2[0], t2[1], t2[2]) < 0.0) std::swap(t2[1], t2[2]);
                tris[owners[0]] = t1;
                tris[owners[1]] = t2;
                flipped = true;
                break;
            }
            if (!any_crossing) break;
            if (!flipped)
                throw DegenerateCloud("could not enforce a boundary edge in the triangulation");
        }
    }
}

}  // namespace detail

/// Imaginary elements over a node cloud. Uniform clouds reuse the structured
/// connectivity; random clouds get a Delaunay triangulation restricted to the
/// domain (triangles whose centroid falls in the cut-out are dropped).
inline TriMesh triangulate_cloud(const NodeCloud& cloud) {
    if (cloud.total() < 3) throw DegenerateCloud("need at least 3 points");

    TriMesh mesh;
    mesh.order = 1;
    mesh.nodes = cloud.points;
    mesh.n_vertex_nodes = cloud.total();
    mesh.tags.resize(cloud.points.size());
    for (int i = 0; i < cloud.total(); ++i) mesh.tags[i] = cloud.tag_of(i);

    if (cloud.uniform && cloud.source_domain) {
        // identical arithmetic on both sides, so exact coordinate lookup is safe
        std::unordered_map<detail::PointKey, int, detail::PointKeyHash> index;
        for (int i = 0; i < cloud.total(); ++i)
            index[detail::key_of(cloud.points[i])] = i;
        const TriMesh structured =
            build_structured_mesh(*cloud.source_domain, cloud.dh, 1);
        for (const auto& t : structured.triangles) {
            std::array<int, 6> remapped{-1, -1, -1, -1, -1, -1};
            for (int k = 0; k < 3; ++k)
                remapped[k] = index.at(detail::key_of(structured.nodes[t[k]]));
            mesh.triangles.push_back(remapped);
        }
        return mesh;
    }

    auto tris = detail::delaunay(cloud.points);
    if (cloud.source_domain)
        detail::enforce_constraints(
            cloud.points, tris,
            detail::boundary_constraints(*cloud.source_domain, cloud.points));
    for (const auto& t : tris) {
        std::array<int, 6> elem{t[0], t[1], t[2], -1, -1, -1};
        if (cloud.source_domain) {
            const Point2 c{(cloud.points[t[0]].x + cloud.points[t[1]].x + cloud.points[t[2]].x) / 3.0,
                           (cloud.points[t[0]].y + cloud.points[t[1]].y + cloud.points[t[2]].y) / 3.0};
            if (!cloud.source_domain->inside(c, 0.0)) continue;
        }
        mesh.triangles.push_back(elem);
    }
    if (mesh.triangles.empty()) throw DegenerateCloud("triangulation produced no triangles");
    for (int e = 0; e < mesh.n_elements(); ++e)
        if (std::abs(mesh.triangle_area(e)) < 1e-14)
            throw DegenerateCloud("triangulation produced a zero-area triangle");
    return mesh;
}

inline const char* tag_name(NodeTag t) {
    switch (t) {
        case NodeTag::Interior: return "interior";
        case NodeTag::Dirichlet: return "dirichlet";
        case NodeTag::Neumann: return "neumann";
    }
    return "?";
}

inline nlohmann::json mesh_to_json(const TriMesh& mesh) {
    nlohmann::json j;
    j["order"] = mesh.order;
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& p : mesh.nodes) nodes.push_back({p.x, p.y});
    auto& tris = j["triangles"] = nlohmann::json::array();
    for (const auto& t : mesh.triangles) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < mesh.nodes_per_element(); ++k) row.push_back(t[k]);
        tris.push_back(row);
    }
    auto& tags = j["tags"] = nlohmann::json::array();
    for (auto t : mesh.tags) tags.push_back(tag_name(t));
    return j;
}

inline nlohmann::json cloud_to_json(const NodeCloud& cloud) {
    nlohmann::json j;
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& p : cloud.points) nodes.push_back({p.x, p.y});
    auto& tags = j["tags"] = nlohmann::json::array();
    for (int i = 0; i < cloud.total(); ++i) tags.push_back(tag_name(cloud.tag_of(i)));
    return j;
}

}  // namespace femrbf
