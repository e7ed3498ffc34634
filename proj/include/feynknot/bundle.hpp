#ifndef FEYNKNOT_BUNDLE_HPP
#define FEYNKNOT_BUNDLE_HPP

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "feynknot/core.hpp"
#include "feynknot/diagram.hpp"
#include "feynknot/geometry.hpp"
#include "feynknot/rng.hpp"
#include "feynknot/strata.hpp"

namespace feynknot {

/// Real height assignment: strictly increasing along the base order and
/// nondegenerate on every edge.
struct HeightFunction {
    std::vector<double> values;  // indexed by vertex

    double operator[](int v) const { return values[static_cast<size_t>(v)]; }
    double& operator[](int v) { return values[static_cast<size_t>(v)]; }
};

/// Complex-valued ground assignment, zero on all base points.
struct GroundFunction {
    std::vector<complex> values;

    complex operator[](int v) const { return values[static_cast<size_t>(v)]; }
    complex& operator[](int v) { return values[static_cast<size_t>(v)]; }
};

inline bool is_valid_height(const KnotGraph& g, const HeightFunction& h) {
    if (static_cast<int>(h.values.size()) != g.num_vertices()) return false;
    for (int b = 0; b + 1 < g.num_base; ++b)
        if (!(h[b] < h[b + 1])) return false;
    for (auto& e : g.edges)
        if (h[e.first] == h[e.second]) return false;
    return true;
}

inline HeightFunction random_height(const KnotGraph& g, Rng& rng, double base_gap = 1e-6,
                                    double edge_gap = 1e-6) {
    for (int attempt = 0; attempt < 1024; ++attempt) {
        HeightFunction h;
        h.values.resize(static_cast<size_t>(g.num_vertices()));
        for (auto& v : h.values) v = rng.uniform();
        std::sort(h.values.begin(), h.values.begin() + g.num_base);
        bool ok = true;
        for (int b = 0; b + 1 < g.num_base && ok; ++b)
            if (h[b + 1] - h[b] < base_gap) ok = false;
        for (auto& e : g.edges)
            if (std::fabs(h[e.first] - h[e.second]) < edge_gap) ok = false;
        if (ok) return h;
    }
    throw std::runtime_error("failed to draw a nondegenerate height function");
}

// ---------------------------------------------------------------------------
// Graph metric induced by a height function: edge {v,w} has length
// |h(v)-h(w)|, distances are shortest arc lengths.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> height_distances_from(const KnotGraph& g, const HeightFunction& h,
                                                 int source) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<size_t>(g.num_vertices()), inf);
    std::vector<char> done(static_cast<size_t>(g.num_vertices()), 0);
    dist[static_cast<size_t>(source)] = 0.0;
    for (;;) {
        int best = -1;
        double bd = inf;
        for (int v = 0; v < g.num_vertices(); ++v)
            if (!done[static_cast<size_t>(v)] && dist[static_cast<size_t>(v)] < bd) {
                bd = dist[static_cast<size_t>(v)];
                best = v;
            }
        if (best < 0) break;
        done[static_cast<size_t>(best)] = 1;
        for (auto& e : g.edges) {
            int other = -1;
            if (e.first == best) other = e.second;
            else if (e.second == best) other = e.first;
            else continue;
            double w = std::fabs(h[e.first] - h[e.second]);
            if (bd + w < dist[static_cast<size_t>(other)]) dist[static_cast<size_t>(other)] = bd + w;
        }
    }
    return dist;
}

}  // namespace detail

inline double h_metric(const KnotGraph& g, const HeightFunction& h, int v, int w) {
    auto dist = detail::height_distances_from(g, h, v);
    double d = dist[static_cast<size_t>(w)];
    if (!std::isfinite(d)) throw std::domain_error("vertices are not connected");
    return d;
}

// ---------------------------------------------------------------------------
// Ground basis: the metric cone functions b(h, y_i) trivializing the complex
// normal bundle, and the associated linear map theta(h): C^s -> C^k.
// ---------------------------------------------------------------------------

/// Edge coordinates of (g, h): the ratio of differences per edge position.
inline std::vector<complex> psi(const KnotGraph& g, const EdgeOrdering& o,
                                const GroundFunction& gr, const HeightFunction& h) {
    std::vector<complex> out;
    out.reserve(static_cast<size_t>(o.size()));
    for (int pos = 0; pos < o.size(); ++pos) {
        auto& e = g.edges[static_cast<size_t>(o.positions[pos])];
        double dh = h[e.first] - h[e.second];
        if (dh == 0.0) throw std::domain_error("height function degenerates an edge");
        out.push_back((gr[e.first] - gr[e.second]) / dh);
    }
    return out;
}

struct GroundBasis {
    std::vector<int> inner_ids;         // vertex index per basis column
    std::vector<GroundFunction> basis;  // real-valued cone functions
    HeightFunction height;
    CMatrix theta;                      // k x basis-size edge-coordinate matrix
};

namespace detail {

/// d(h, y_i): distance from y_i to its target set (all base points plus the
/// later inner vertices; for diagrams without base points just the later
/// inner vertices).
inline double cone_radius(const KnotGraph& g, const HeightFunction&, int yi,
                          const std::vector<double>& dist_from_yi) {
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < g.num_base; ++b) best = std::min(best, dist_from_yi[static_cast<size_t>(b)]);
    for (int v = yi + 1; v < g.num_vertices(); ++v)
        best = std::min(best, dist_from_yi[static_cast<size_t>(v)]);
    return best;
}

}  // namespace detail

/// Basis column count: one per inner vertex when base points are present
/// (every inner vertex must then reach a base point through the graph); for
/// diagrams with inner vertices only, the maximal inner vertex is dropped and
/// the diagram must be connected.
inline GroundBasis ground_basis(const KnotGraph& g, const HeightFunction& h,
                                const EdgeOrdering& o) {
    if (!is_valid_height(g, h)) throw std::invalid_argument("invalid height function");
    GroundBasis gb;
    gb.height = h;
    int last = g.num_base > 0 ? g.num_vertices() : g.num_vertices() - 1;
    if (g.num_base > 0 && !inner_vertices_reach_base(g))
        throw std::invalid_argument("an inner vertex does not reach the base points");
    for (int yi = g.num_base; yi < last; ++yi) {
        auto dist = detail::height_distances_from(g, h, yi);
        double radius = detail::cone_radius(g, h, yi, dist);
        if (!std::isfinite(radius))
            throw std::invalid_argument("inner vertex has no reachable target");
        GroundFunction gr;
        gr.values.assign(static_cast<size_t>(g.num_vertices()), complex{});
        for (int v = 0; v < g.num_vertices(); ++v)
            gr[v] = std::max(0.0, radius - dist[static_cast<size_t>(v)]);
        gb.inner_ids.push_back(yi);
        gb.basis.push_back(std::move(gr));
    }
    int k = g.num_edges();
    int s = static_cast<int>(gb.basis.size());
    gb.theta = CMatrix(k, s);
    for (int c = 0; c < s; ++c) {
        auto col = psi(g, o, gb.basis[static_cast<size_t>(c)], h);
        for (int r = 0; r < k; ++r) gb.theta(r, c) = col[static_cast<size_t>(r)];
    }
    return gb;
}

inline GroundBasis ground_basis(const KnotGraph& g, const HeightFunction& h) {
    return ground_basis(g, h, EdgeOrdering::identity(g));
}

/// sigma_min(theta): positive iff the trivialization is injective.
inline double check_injective(const GroundBasis& gb) {
    if (gb.theta.cols() == 0) return 0.0;
    return smallest_singular_value(gb.theta);
}

// ---------------------------------------------------------------------------
// Isotopy between the trivializations attached to adjacent inner orders.
// ---------------------------------------------------------------------------

struct IsotopyCheck {
    std::vector<double> blend;         // t values
    std::vector<double> determinant;   // det G at each t, numeric
    std::vector<double> closed_form;   // same determinant, expanded form
};

/// Blends the cone radii of the order (..., y_r, y_{r+1}, ...) toward the
/// common refinement shared with the transposed order and reports det(G),
/// G_ij = g_t(h, y_i)(y_j), at the sampled blend points. All must be > 0.
inline IsotopyCheck isotopy_check(const KnotGraph& g, const HeightFunction& h, int r) {
    int s = g.num_inner;
    if (r < 1 || r > s - 1) throw std::invalid_argument("transposition index out of range");
    if (!is_valid_height(g, h)) throw std::invalid_argument("invalid height function");
    if (g.num_base == 0 || !inner_vertices_reach_base(g))
        throw std::invalid_argument("an inner vertex does not reach the base points");
    int yr = g.num_base + (r - 1);  // vertex indices of the transposed pair
    int yr1 = yr + 1;

    std::vector<std::vector<double>> dist(static_cast<size_t>(s));
    for (int i = 0; i < s; ++i)
        dist[static_cast<size_t>(i)] = detail::height_distances_from(g, h, g.num_base + i);

    auto radius = [&](int yi, bool common) {
        double best = std::numeric_limits<double>::infinity();
        auto& d = dist[static_cast<size_t>(yi - g.num_base)];
        for (int b = 0; b < g.num_base; ++b) best = std::min(best, d[static_cast<size_t>(b)]);
        int lo = (common && (yi == yr || yi == yr1)) ? yr1 + 1 : yi + 1;
        for (int v = lo; v < g.num_vertices(); ++v)
            if (v != yi) best = std::min(best, d[static_cast<size_t>(v)]);
        return best;
    };

    IsotopyCheck out;
    out.blend = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (double t : out.blend) {
        Matrix G(s, s);
        std::vector<double> gt_diag(static_cast<size_t>(s));
        for (int i = 0; i < s; ++i) {
            int yi = g.num_base + i;
            double d_plain = radius(yi, false);
            double d_common = radius(yi, true);
            double dt = t * d_plain + (1.0 - t) * d_common;
            auto& drow = dist[static_cast<size_t>(i)];
            for (int j = 0; j < s; ++j)
                G(i, j) = std::max(0.0, dt - drow[static_cast<size_t>(g.num_base + j)]);
        }
        double dnum = det(G);
        // the blended radii keep G triangular outside the (r, r+1) block
        double prod = 1.0;
        for (int i = 0; i < s; ++i) prod *= G(i, i);
        double block = G(r - 1, r - 1) * G(r, r) - G(r - 1, r) * G(r, r - 1);
        double dform = (G(r - 1, r - 1) * G(r, r)) != 0.0
                           ? prod / (G(r - 1, r - 1) * G(r, r)) * block
                           : dnum;
        out.determinant.push_back(dnum);
        out.closed_form.push_back(dform);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transition maps of the normal bundle across boundary identifications.
// ---------------------------------------------------------------------------

struct TransitionMap {
    StratumType kind = StratumType::Plain;
    Matrix raw;         // basis-size square, columns are basis images
    Matrix normalized;  // exact signed permutation
};

namespace detail {

/// Expansion of functions in the ground basis of (g, h): solves for
/// coefficients c with sum_j c_j g_j = f at every inner vertex (an extra free
/// constant absorbs the translation freedom when there are no base points).
class BasisExpander {
public:
    BasisExpander(const KnotGraph& g, const GroundBasis& gb) : g_(g), gb_(gb) {
        int s = static_cast<int>(gb.basis.size());
        bool free_constant = g.num_base == 0;
        int n = s + (free_constant ? 1 : 0);
        if (n != g.num_inner)
            throw std::logic_error("basis size does not match inner vertex count");
        mat_ = Matrix(n, n);
        for (int row = 0; row < n; ++row) {
            int v = g.num_base + row;  // evaluate at each inner vertex
            for (int j = 0; j < s; ++j) mat_(row, j) = gb.basis[static_cast<size_t>(j)][v].real();
            if (free_constant) mat_(row, s) = 1.0;
        }
    }

    /// Coefficients of f in the basis (constant coordinate dropped).
    std::vector<double> expand(const std::vector<double>& f_at_inner) const {
        auto c = solve(mat_, f_at_inner);
        c.resize(gb_.basis.size());
        return c;
    }

private:
    const KnotGraph& g_;
    const GroundBasis& gb_;
    Matrix mat_;
};

/// Best signed-permutation approximation: the assignment maximizing the
/// product of absolute entries, signed by those entries. Requires the
/// residual triangular structure |det raw| = |product of assigned entries|.
inline std::optional<Matrix> normalize_to_signed_permutation(const Matrix& raw, double tol) {
    int n = raw.rows();
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    double best = -1.0;
    std::vector<int> best_perm;
    do {
        double p = 1.0;
        for (int c = 0; c < n; ++c) p *= std::fabs(raw(perm[static_cast<size_t>(c)], c));
        if (p > best) {
            best = p;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (best <= 0.0) return std::nullopt;
    double d = std::fabs(det(raw));
    if (std::fabs(d - best) > tol * std::max(1.0, best)) return std::nullopt;
    Matrix out(n, n);
    for (int c = 0; c < n; ++c) {
        int r = best_perm[static_cast<size_t>(c)];
        out(r, c) = raw(r, c) > 0.0 ? 1.0 : -1.0;
    }
    return out;
}

/// Moves the listed inner vertices of `g` to the front of the inner order (in
/// the listed order), returning the reordered diagram and the vertex
/// relabeling old -> new.
inline std::pair<KnotGraph, std::vector<int>> sort_inner_front(const KnotGraph& g,
                                                               const std::vector<int>& front) {
    std::vector<int> relabel(static_cast<size_t>(g.num_vertices()), -1);
    for (int i = 0; i < g.num_base; ++i) relabel[static_cast<size_t>(i)] = i;
    int next = g.num_base;
    for (int v : front) {
        if (v < g.num_base || v >= g.num_vertices() || relabel[static_cast<size_t>(v)] >= 0)
            throw std::invalid_argument("invalid inner reordering");
        relabel[static_cast<size_t>(v)] = next++;
    }
    for (int u = g.num_base; u < g.num_vertices(); ++u)
        if (relabel[static_cast<size_t>(u)] < 0) relabel[static_cast<size_t>(u)] = next++;
    KnotGraph out;
    out.num_base = g.num_base;
    out.num_inner = g.num_inner;
    out.names.resize(static_cast<size_t>(g.num_vertices()));
    for (int u = 0; u < g.num_vertices(); ++u)
        out.names[static_cast<size_t>(relabel[static_cast<size_t>(u)])] = g.names[static_cast<size_t>(u)];
    for (auto& e : g.edges)
        out.add_edge(relabel[static_cast<size_t>(e.first)], relabel[static_cast<size_t>(e.second)]);
    return {out, relabel};
}

inline std::pair<KnotGraph, std::vector<int>> sort_inner_first(const KnotGraph& g, int v) {
    return sort_inner_front(g, {v});
}

}  // namespace detail

/// Raw and normalized transition matrix across a first-kind identification
/// (types I, II, Y) on a collapsed diagram whose distinguished vertex is the
/// minimal inner vertex. `h` is a height function on that diagram.
inline TransitionMap transition_first_kind(const KnotGraph& c, const HeightFunction& h,
                                           StratumType kind) {
    if (!is_valid_height(c, h)) throw std::invalid_argument("invalid height function");
    int v = c.num_base;  // minimal inner vertex
    if (c.num_inner < 1) throw std::invalid_argument("no inner vertex");
    int deg = c.degree(v);
    HeightFunction th = h;
    std::vector<int> flipped{v};

    if (kind == StratumType::TypeII) {
        if (deg != 2) throw std::invalid_argument("type II needs a bivalent distinguished vertex");
        auto nb = c.neighbors(v);
        th[v] = h[nb[0]] + h[nb[1]] - h[v];
    } else if (kind == StratumType::TypeI) {
        if (deg != 1) throw std::invalid_argument("type I needs a univalent distinguished vertex");
        int v1 = c.neighbors(v)[0];
        double ext = 0.0;
        for (int a = 0; a < c.num_vertices(); ++a)
            for (int b = a + 1; b < c.num_vertices(); ++b)
                if (a != v && b != v) ext = std::max(ext, std::fabs(h[a] - h[b]));
        double gap = h[v] - h[v1];
        if (gap == 0.0) throw std::domain_error("degenerate edge at the distinguished vertex");
        th[v] = h[v1] + 2.0 * ext * (gap > 0 ? 1.0 : -1.0);
    } else if (kind == StratumType::TypeY) {
        if (deg != 1) throw std::invalid_argument("type Y needs a univalent distinguished vertex");
        int v1 = c.neighbors(v)[0];
        if (!c.is_inner(v1) || c.degree(v1) != 3)
            throw std::invalid_argument("type Y needs a trivalent inner neighbor");
        if (v1 != c.num_base + 1)
            throw std::invalid_argument("type Y needs the trivalent neighbor second in the inner order");
        std::vector<int> others;
        for (int w : c.neighbors(v1))
            if (w != v) others.push_back(w);
        th[v] = h[others[0]] + h[others[1]] - h[v];
        th[v1] = h[others[0]] + h[others[1]] - h[v1];
        flipped.push_back(v1);
    } else {
        throw std::invalid_argument("not a first-kind identification");
    }

    GroundBasis from = ground_basis(c, h);
    GroundBasis to = ground_basis(c, th);
    detail::BasisExpander expander(c, to);

    int s = static_cast<int>(from.basis.size());
    TransitionMap tm;
    tm.kind = kind;
    tm.raw = Matrix(s, s);
    for (int i = 0; i < s; ++i) {
        // image of b(h, y_i) under the identification, evaluated at inner vertices
        const GroundFunction& gi = from.basis[static_cast<size_t>(i)];
        std::vector<double> f(static_cast<size_t>(c.num_inner));
        for (int u = 0; u < c.num_inner; ++u) f[static_cast<size_t>(u)] = gi[c.num_base + u].real();
        if (kind == StratumType::TypeII || kind == StratumType::TypeY) {
            if (kind == StratumType::TypeII) {
                auto nb = c.neighbors(v);
                f[static_cast<size_t>(v - c.num_base)] =
                    (gi[nb[0]] + gi[nb[1]] - gi[v]).real();
            } else {
                int v1 = flipped[1];
                std::vector<int> others;
                for (int w : c.neighbors(v1))
                    if (w != v) others.push_back(w);
                complex sum = gi[others[0]] + gi[others[1]];
                f[static_cast<size_t>(v - c.num_base)] = (sum - gi[v]).real();
                f[static_cast<size_t>(v1 - c.num_base)] = (sum - gi[v1]).real();
            }
        } else {  // TypeI
            int v1 = c.neighbors(v)[0];
            double ext = 0.0;
            for (int a = 0; a < c.num_vertices(); ++a)
                for (int b = a + 1; b < c.num_vertices(); ++b)
                    if (a != v && b != v) ext = std::max(ext, std::fabs(h[a] - h[b]));
            double gap = std::fabs(h[v] - h[v1]);
            f[static_cast<size_t>(v - c.num_base)] =
                (gi[v1] + 2.0 * ext * (gi[v] - gi[v1]) / gap).real();
        }
        auto coeff = expander.expand(f);
        for (int j = 0; j < s; ++j) tm.raw(j, i) = coeff[static_cast<size_t>(j)];
    }

    auto norm = detail::normalize_to_signed_permutation(tm.raw, 1e-6);
    if (!norm) throw std::runtime_error("transition map does not normalize to a signed permutation");
    tm.normalized = *norm;
    return tm;
}

inline TransitionMap transition_type2(const KnotGraph& collapsed, const HeightFunction& h) {
    return transition_first_kind(collapsed, h, StratumType::TypeII);
}

inline TransitionMap transition_type1(const KnotGraph& collapsed, const HeightFunction& h) {
    return transition_first_kind(collapsed, h, StratumType::TypeI);
}

inline TransitionMap transition_type_y(const KnotGraph& collapsed, const HeightFunction& h) {
    return transition_first_kind(collapsed, h, StratumType::TypeY);
}

/// Edge identification: the distinguished inner endpoint's basis vector maps
/// onto the collapsed coordinate with sign h(v)-h(w); all other basis vectors
/// pass through to the quotient basis.
inline TransitionMap transition_type3(const Stratum& s, const HeightFunction& h_parent) {
    if (classify(s) != StratumType::TypeIII) throw std::invalid_argument("type III stratum required");
    // v: the distinguished inner endpoint (the smaller one when both are inner)
    int v_parent, w_parent;
    if (s.parent.is_inner(s.a[0])) {
        v_parent = s.a[0];
        w_parent = s.a[1];
    } else {
        v_parent = s.a[1];
        w_parent = s.a[0];
    }
    double gap = h_parent[v_parent] - h_parent[w_parent];
    if (gap == 0.0) throw std::domain_error("height degenerates the collapsed edge");
    int sz = s.parent.num_inner;
    TransitionMap tm;
    tm.kind = StratumType::TypeIII;
    tm.raw = Matrix::identity(sz);
    tm.raw(0, 0) = gap > 0 ? 1.0 : -1.0;
    tm.normalized = tm.raw;
    return tm;
}

// ---------------------------------------------------------------------------
// Boundary families: interpolating height functions h_lambda between a
// quotient height and a collapsed height, and the modified bases whose
// restriction to the collapsed part vanishes in the limit.
// ---------------------------------------------------------------------------

/// Scale factor applied to the collapsed height pattern inside h_lambda.
inline double boundary_scale(const Stratum& s, const HeightFunction& h1,
                             const HeightFunction& h2, double lambda) {
    double eps = std::numeric_limits<double>::infinity();
    for (auto& e : s.quotient.edges)
        eps = std::min(eps, std::fabs(h1[e.first] - h1[e.second]));
    if (!std::isfinite(eps)) eps = 1.0;
    double extent = 0.0;
    for (int a = 0; a < s.collapsed.num_vertices(); ++a)
        for (int b = a + 1; b < s.collapsed.num_vertices(); ++b)
            extent = std::max(extent, std::fabs(h2[a] - h2[b]));
    if (extent == 0.0) throw std::invalid_argument("collapsed height has zero extent");
    return lambda * eps / extent;
}

/// Anchor vertex of the collapsed diagram: its minimal base point when A
/// meets the base points, otherwise the maximal inner vertex.
inline int boundary_anchor(const Stratum& s) {
    return s.collapsed.num_base > 0 ? 0 : s.collapsed.num_vertices() - 1;
}

/// h_lambda: the collapsed height pattern shrunk by `lambda` and grafted at
/// the merge vertex of the quotient height. Errors when the result is not a
/// valid height function on the parent.
inline HeightFunction boundary_family(const Stratum& s, const HeightFunction& h1,
                                      const HeightFunction& h2, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
    if (!is_valid_height(s.quotient, h1)) throw std::invalid_argument("invalid quotient height");
    if (static_cast<int>(h2.values.size()) != s.collapsed.num_vertices())
        throw std::invalid_argument("collapsed height has wrong size");
    double scale = boundary_scale(s, h1, h2, lambda);
    int anchor = boundary_anchor(s);
    HeightFunction h;
    h.values.resize(static_cast<size_t>(s.parent.num_vertices()));
    for (int v = 0; v < s.parent.num_vertices(); ++v) {
        if (!s.in_a(v)) {
            h[v] = h1[s.parent_to_quotient[v]];
        } else {
            h[v] = h1[s.quotient_new_vertex] +
                   scale * (h2[s.parent_to_collapsed[v]] - h2[anchor]);
        }
    }
    if (!is_valid_height(s.parent, h))
        throw std::domain_error("lambda too large: interpolated height degenerates");
    return h;
}

/// Ground basis at h_lambda with the collapsed-edge differences of the
/// columns attached to outside inner vertices shrunk by lambda, so their
/// restriction to the collapsed part tends to zero. theta carries the
/// modified edge coordinates; the stored functions keep the modified values
/// on the collapsed block (anchored at the boundary anchor).
inline GroundBasis modified_basis(const Stratum& s, const HeightFunction& h1,
                                  const HeightFunction& h2, double lambda,
                                  const EdgeOrdering& o) {
    HeightFunction hl = boundary_family(s, h1, h2, lambda);
    GroundBasis gb = ground_basis(s.parent, hl, o);
    int anchor_parent = -1;
    for (int v = 0; v < s.parent.num_vertices(); ++v)
        if (s.in_a(v) && s.parent_to_collapsed[v] == boundary_anchor(s)) anchor_parent = v;
    for (size_t col = 0; col < gb.basis.size(); ++col) {
        int y = gb.inner_ids[col];
        if (s.in_a(y)) continue;  // only outside columns are modified
        // edge coordinates: collapsed-edge differences shrink by lambda,
        // mixed and outside edges keep their coordinate
        for (int pos = 0; pos < o.size(); ++pos) {
            auto& pe = s.parent.edges[static_cast<size_t>(o.positions[static_cast<size_t>(pos)])];
            if (s.in_a(pe.first) && s.in_a(pe.second))
                gb.theta(pos, static_cast<int>(col)) = gb.theta(pos, static_cast<int>(col)) * lambda;
        }
        // pointwise representative on the collapsed block, anchored
        GroundFunction& gr = gb.basis[col];
        complex base = gr[anchor_parent];
        for (int v = 0; v < s.parent.num_vertices(); ++v)
            if (s.in_a(v)) gr[v] = base + lambda * (gr[v] - base);
    }
    return gb;
}

/// Norm of the restriction of a ground function to the collapsed block after
/// rescaling to unit collapsed height: the size of b|_{A} seen at the
/// boundary.
inline double collapsed_restriction_norm(const Stratum& s, const GroundFunction& gr,
                                         double scale) {
    int anchor_parent = -1;
    for (int v = 0; v < s.parent.num_vertices(); ++v)
        if (s.in_a(v) && s.parent_to_collapsed[v] == boundary_anchor(s)) anchor_parent = v;
    double m = 0.0;
    for (int v = 0; v < s.parent.num_vertices(); ++v)
        if (s.in_a(v)) m = std::max(m, std::abs(gr[v] - gr[anchor_parent]) / scale);
    return m;
}

// ---------------------------------------------------------------------------
// Structure-group certificate: every normalized transition map must be a
// signed permutation and the group they generate a subgroup of the
// hyperoctahedral group.
// ---------------------------------------------------------------------------

/// Signed permutation in one-line form: entry i holds (image+1) * sign.
using SignedPerm = std::vector<int>;

inline SignedPerm to_signed_perm(const Matrix& m) {
    int n = m.rows();
    SignedPerm sp(static_cast<size_t>(n), 0);
    for (int c = 0; c < n; ++c) {
        int hits = 0;
        for (int r = 0; r < n; ++r) {
            double v = m(r, c);
            if (v == 0.0) continue;
            if (v != 1.0 && v != -1.0) throw std::domain_error("not a signed permutation");
            sp[static_cast<size_t>(c)] = (r + 1) * (v > 0 ? 1 : -1);
            ++hits;
        }
        if (hits != 1) throw std::domain_error("not a signed permutation");
    }
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int c = 0; c < n; ++c) {
        int img = std::abs(sp[static_cast<size_t>(c)]) - 1;
        if (seen[static_cast<size_t>(img)]) throw std::domain_error("not a signed permutation");
        seen[static_cast<size_t>(img)] = 1;
    }
    return sp;
}

inline SignedPerm compose(const SignedPerm& a, const SignedPerm& b) {
    // (a o b): apply b, then a
    SignedPerm out(b.size());
    for (size_t i = 0; i < b.size(); ++i) {
        int bi = b[i];
        int mid = std::abs(bi) - 1;
        int ai = a[static_cast<size_t>(mid)];
        out[i] = (bi > 0) ? ai : -ai;
    }
    return out;
}

/// Order of the group generated by signed permutations, by closure; stops at
/// `cap` elements.
inline long long signed_perm_group_order(const std::set<SignedPerm>& generators, long long cap) {
    if (generators.empty()) return 1;
    size_t n = generators.begin()->size();
    SignedPerm id(n);
    for (size_t i = 0; i < n; ++i) id[i] = static_cast<int>(i) + 1;
    std::set<SignedPerm> group{id};
    std::vector<SignedPerm> frontier{id};
    while (!frontier.empty()) {
        std::vector<SignedPerm> next;
        for (auto& g : frontier)
            for (auto& gen : generators) {
                auto prod = compose(gen, g);
                if (group.insert(prod).second) next.push_back(std::move(prod));
                if (static_cast<long long>(group.size()) > cap) return -1;
            }
        frontier = std::move(next);
    }
    return static_cast<long long>(group.size());
}

inline long long hyperoctahedral_order(int s) {
    long long o = 1;
    for (int i = 1; i <= s; ++i) o *= 2ll * i;
    return o;
}

struct StructureGroupReport {
    struct PerSize {
        int basis_size = 0;
        std::vector<SignedPerm> generators;
        long long group_order = 0;
        long long ambient_order = 0;
        bool divides = false;
    };
    std::vector<PerSize> groups;
    std::vector<std::string> violations;
    long long strata_sampled = 0;
    bool ok() const { return violations.empty(); }
};

/// Samples strata and height functions over the given diagrams, collects the
/// normalized transition maps (plus the inner-order permutations used to move
/// distinguished vertices first), and certifies the finite structure group.
inline StructureGroupReport structure_group(const std::vector<KnotGraph>& diagrams,
                                            long long trials, std::uint64_t seed) {
    StructureGroupReport report;
    std::map<int, std::set<SignedPerm>> gens;
    Rng rng(seed);

    auto add_generator = [&](int size, const Matrix& normalized, const std::string& where) {
        try {
            gens[size].insert(to_signed_perm(normalized));
        } catch (const std::domain_error&) {
            report.violations.push_back("non signed-permutation generator at " + where);
        }
    };

    struct Site {
        const KnotGraph* g;
        std::vector<int> a;
        StratumType type;
    };
    std::vector<Site> sites;
    for (auto& g : diagrams) {
        if (g.num_vertices() > 16) continue;
        for (auto& a : admissible_strata_sets(g)) {
            Stratum st = make_stratum(g, a);
            StratumType t = classify(st);
            if (t == StratumType::TypeI || t == StratumType::TypeII || t == StratumType::TypeY ||
                t == StratumType::TypeIII)
                sites.push_back({&g, a, t});
        }
    }
    if (sites.empty()) return report;

    for (long long trial = 0; trial < trials; ++trial) {
        auto& site = sites[static_cast<size_t>(rng.bits() % sites.size())];
        Stratum st = make_stratum(*site.g, site.a);
        ++report.strata_sampled;
        try {
            if (site.type == StratumType::TypeIII) {
                HeightFunction h = random_height(st.parent, rng);
                TransitionMap tm = transition_type3(st, h);
                add_generator(tm.raw.rows(), tm.normalized, "typeIII stratum");
                continue;
            }
            // first-kind site: work on the collapsed diagram with the
            // distinguished vertex sorted to the front
            const KnotGraph& c0 = st.collapsed;
            if (c0.num_base == 0 && c0.num_inner < 2) continue;
            int v = -1;
            for (int u = c0.num_base; u < c0.num_vertices() && v < 0; ++u) {
                int d = c0.degree(u);
                if (site.type == StratumType::TypeII && d == 2) v = u;
                if ((site.type == StratumType::TypeI || site.type == StratumType::TypeY) && d == 1) {
                    int nb = c0.neighbors(u)[0];
                    bool y = c0.is_inner(nb) && c0.degree(nb) == 3;
                    if ((site.type == StratumType::TypeY) == y &&
                        c0.is_inner(nb) && c0.degree(nb) != 1)
                        v = u;
                }
            }
            if (v < 0) continue;
            std::vector<int> front{v};
            if (site.type == StratumType::TypeY) front.push_back(c0.neighbors(v)[0]);
            auto [c, relabel] = detail::sort_inner_front(c0, front);
            // basis permutation introduced by the re-sort is itself a generator
            int bsize = c.num_base > 0 ? c.num_inner : c.num_inner - 1;
            if (bsize < 1) continue;
            if (v != c0.num_base) {
                Matrix perm(bsize, bsize);
                // old basis order -> new basis order on the shared inner set
                std::vector<int> old_ids, new_ids;
                int last_old = c0.num_base > 0 ? c0.num_vertices() : c0.num_vertices() - 1;
                for (int u = c0.num_base; u < last_old; ++u) old_ids.push_back(u);
                for (int u = 0; u < bsize; ++u) new_ids.push_back(c.num_base + u);
                bool representable = true;
                for (int col = 0; col < bsize; ++col) {
                    int nu = relabel[static_cast<size_t>(old_ids[static_cast<size_t>(col)])];
                    int row = nu - c.num_base;
                    if (row < 0 || row >= bsize) {
                        representable = false;
                        break;
                    }
                    perm(row, col) = 1.0;
                }
                if (representable) add_generator(bsize, perm, "inner reordering");
            }
            HeightFunction h = random_height(c, rng);
            TransitionMap tm = transition_first_kind(c, h, site.type);
            add_generator(static_cast<int>(tm.raw.rows()), tm.normalized, to_string(site.type));
        } catch (const std::domain_error&) {
            // degenerate draw (coincident heights); not a structural violation
        } catch (const std::invalid_argument&) {
        } catch (const std::exception& ex) {
            report.violations.push_back(std::string("transition failure: ") + ex.what());
        }
    }

    for (auto& [size, gset] : gens) {
        StructureGroupReport::PerSize ps;
        ps.basis_size = size;
        ps.generators.assign(gset.begin(), gset.end());
        ps.ambient_order = hyperoctahedral_order(size);
        ps.group_order = signed_perm_group_order(gset, ps.ambient_order + 1);
        ps.divides = ps.group_order > 0 && ps.ambient_order % ps.group_order == 0;
        if (!ps.divides)
            report.violations.push_back("group order does not divide the hyperoctahedral order");
        report.groups.push_back(std::move(ps));
    }
    return report;
}

}  // namespace feynknot

#endif
