#ifndef FEYNKNOT_STRATA_HPP
#define FEYNKNOT_STRATA_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "feynknot/core.hpp"
#include "feynknot/diagram.hpp"
#include "feynknot/geometry.hpp"

namespace feynknot {

enum class StratumType { Type0, TypeI, TypeII, TypeIII, TypeIV, TypeY, Plain };

inline const char* to_string(StratumType t) {
    switch (t) {
        case StratumType::Type0: return "type0";
        case StratumType::TypeI: return "typeI";
        case StratumType::TypeII: return "typeII";
        case StratumType::TypeIII: return "typeIII";
        case StratumType::TypeIV: return "typeIV";
        case StratumType::TypeY: return "typeY";
        case StratumType::Plain: return "plain";
    }
    return "?";
}

/// Codimension-one boundary stratum of a configuration space: the vertices of
/// A collide. Splits the diagram into the quotient (A collapsed to one new
/// vertex) and the collapsed subdiagram spanned by A, with every parent edge
/// assigned to exactly one side.
struct Stratum {
    KnotGraph parent;
    std::vector<int> a;  // colliding vertex set, ascending parent indices
    KnotGraph quotient;
    KnotGraph collapsed;

    int quotient_new_vertex = -1;             // index of the merge vertex in `quotient`
    std::vector<int> parent_to_quotient;      // -1 for v in A (use quotient_new_vertex)
    std::vector<int> parent_to_collapsed;     // -1 for v not in A

    enum class Part { Quotient, Collapsed };
    std::vector<Part> edge_part;   // per parent edge
    std::vector<int> edge_image;   // index within that part's edge list

    bool in_a(int v) const { return parent_to_collapsed[v] >= 0; }
};

/// Builds the stratum for vertex set `a`. Requires |a| >= 2 and, when `a`
/// meets the base points, that it meets them in an interval of the base order.
inline Stratum make_stratum(const KnotGraph& g, std::vector<int> a) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    if (a.size() < 2) throw std::invalid_argument("stratum needs at least two vertices");
    for (int v : a)
        if (v < 0 || v >= g.num_vertices()) throw std::invalid_argument("vertex out of range");

    std::vector<int> base_in_a;
    for (int v : a)
        if (g.is_base(v)) base_in_a.push_back(v);
    if (!base_in_a.empty()) {
        for (size_t i = 1; i < base_in_a.size(); ++i)
            if (base_in_a[i] != base_in_a[i - 1] + 1)
                throw std::invalid_argument("base points of a stratum must form an interval");
    }

    Stratum s;
    s.parent = g;
    s.a = a;
    s.parent_to_quotient.assign(g.num_vertices(), -1);
    s.parent_to_collapsed.assign(g.num_vertices(), -1);

    // collapsed subdiagram: vertices of A with induced orders
    std::vector<int> a_base, a_inner;
    for (int v : a) (g.is_base(v) ? a_base : a_inner).push_back(v);
    s.collapsed.num_base = static_cast<int>(a_base.size());
    s.collapsed.num_inner = static_cast<int>(a_inner.size());
    for (size_t i = 0; i < a_base.size(); ++i) {
        s.collapsed.names.push_back(g.names[a_base[i]]);
        s.parent_to_collapsed[a_base[i]] = static_cast<int>(i);
    }
    for (size_t i = 0; i < a_inner.size(); ++i) {
        s.collapsed.names.push_back(g.names[a_inner[i]]);
        s.parent_to_collapsed[a_inner[i]] = s.collapsed.num_base + static_cast<int>(i);
    }

    // quotient: remaining vertices plus the merge vertex `a`
    bool a_is_base = !base_in_a.empty();
    std::vector<int> q_base, q_inner;  // parent indices; -1 marks the merge vertex slot
    for (int v = 0; v < g.num_base; ++v) {
        if (s.parent_to_collapsed[v] < 0) {
            q_base.push_back(v);
        } else if (v == base_in_a.front()) {
            q_base.push_back(-1);  // the interval collapses in place
        }
    }
    if (a_is_base) {
        for (int v = g.num_base; v < g.num_vertices(); ++v)
            if (s.parent_to_collapsed[v] < 0) q_inner.push_back(v);
    } else {
        // merge vertex is inner; it takes the slot of the largest inner vertex of A
        int slot = a_inner.back();
        for (int v = g.num_base; v < g.num_vertices(); ++v) {
            if (s.parent_to_collapsed[v] < 0) q_inner.push_back(v);
            else if (v == slot) q_inner.push_back(-1);
        }
    }
    s.quotient.num_base = static_cast<int>(q_base.size());
    s.quotient.num_inner = static_cast<int>(q_inner.size());
    int qi = 0;
    for (int v : q_base) {
        if (v < 0) {
            s.quotient.names.push_back("a");
            s.quotient_new_vertex = qi;
        } else {
            s.quotient.names.push_back(g.names[v]);
            s.parent_to_quotient[v] = qi;
        }
        ++qi;
    }
    for (int v : q_inner) {
        if (v < 0) {
            s.quotient.names.push_back("a");
            s.quotient_new_vertex = qi;
        } else {
            s.quotient.names.push_back(g.names[v]);
            s.parent_to_quotient[v] = qi;
        }
        ++qi;
    }

    // edges: inside A go to the collapsed side, all others to the quotient
    for (auto& e : g.edges) {
        bool va = s.parent_to_collapsed[e.first] >= 0;
        bool wa = s.parent_to_collapsed[e.second] >= 0;
        if (va && wa) {
            s.edge_part.push_back(Stratum::Part::Collapsed);
            s.edge_image.push_back(s.collapsed.num_edges());
            s.collapsed.add_edge(s.parent_to_collapsed[e.first], s.parent_to_collapsed[e.second]);
        } else {
            int qv = va ? s.quotient_new_vertex : s.parent_to_quotient[e.first];
            int qw = wa ? s.quotient_new_vertex : s.parent_to_quotient[e.second];
            s.edge_part.push_back(Stratum::Part::Quotient);
            s.edge_image.push_back(s.quotient.num_edges());
            s.quotient.add_edge(qv, qw);
        }
    }
    return s;
}

/// Classification of the identification map attached to a stratum.
///
/// For |A| = 2 the stratum is an edge identification (inner endpoint) or the
/// plain bundle projection (non-edge). For |A| >= 3 a free vertex of the
/// collapsed part dominates; otherwise a univalent inner vertex is examined
/// through its unique neighbor: a trivalent inner neighbor gives the two-point
/// reflection (type Y), a base or univalent neighbor is handled by the
/// extended translation-dilation reductions (plain), anything else keeps the
/// univalent renormalization (type I). A bivalent inner vertex without any
/// univalent one gives type II.
inline StratumType classify(const Stratum& s) {
    const KnotGraph& c = s.collapsed;
    if (s.a.size() == 2) {
        bool has_edge = c.num_edges() > 0;
        bool has_inner = c.num_inner > 0;
        if (has_edge && has_inner) return StratumType::TypeIII;
        if (!has_edge) return StratumType::TypeIV;
        return StratumType::Plain;  // edge between two base points
    }
    for (int v = 0; v < c.num_vertices(); ++v)
        if (c.degree(v) == 0) return StratumType::Type0;
    bool saw_univalent = false, saw_y = false, saw_i = false;
    for (int v = c.num_base; v < c.num_vertices(); ++v) {
        if (c.degree(v) != 1) continue;
        saw_univalent = true;
        int nb = c.neighbors(v)[0];
        if (c.is_base(nb) || c.degree(nb) == 1) continue;  // reduced elsewhere
        if (c.is_inner(nb) && c.degree(nb) == 3)
            saw_y = true;
        else
            saw_i = true;
    }
    if (saw_y) return StratumType::TypeY;
    if (saw_i) return StratumType::TypeI;
    if (saw_univalent) return StratumType::Plain;
    for (int v = c.num_base; v < c.num_vertices(); ++v)
        if (c.degree(v) == 2) return StratumType::TypeII;
    return StratumType::Plain;
}

/// A point of the stratum: a configuration of the quotient diagram together
/// with an infinitesimal configuration of the collapsed diagram.
struct StratumPoint {
    Placement quotient;
    Placement collapsed;
};

namespace detail {

inline int first_inner_of_degree(const KnotGraph& g, int degree) {
    for (int v = g.num_base; v < g.num_vertices(); ++v)
        if (g.degree(v) == degree) return v;
    return -1;
}

inline double max_pairwise(const Placement& p, const std::vector<int>& skip = {}) {
    double m = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (std::find(skip.begin(), skip.end(), static_cast<int>(i)) != skip.end()) continue;
        for (size_t j = i + 1; j < p.size(); ++j) {
            if (std::find(skip.begin(), skip.end(), static_cast<int>(j)) != skip.end()) continue;
            m = std::max(m, distance(p[i], p[j]));
        }
    }
    return m;
}

}  // namespace detail

/// Reflects the bivalent inner vertex through the sum of its two neighbors.
/// Involution; the Gauss multiset is preserved with the two incident edge
/// directions exchanged up to sign.
inline StratumPoint tau2(const Stratum& s, const StratumPoint& pt) {
    if (classify(s) != StratumType::TypeII) throw std::invalid_argument("tau2 needs a type II stratum");
    const KnotGraph& c = s.collapsed;
    int v = detail::first_inner_of_degree(c, 2);
    auto nb = c.neighbors(v);
    StratumPoint out = pt;
    out.collapsed[v] = pt.collapsed[nb[0]] + pt.collapsed[nb[1]] - pt.collapsed[v];
    return out;
}

/// Reflects both the univalent vertex and its trivalent neighbor through the
/// sum of the neighbor's other two endpoints. Involution.
inline StratumPoint tau_y(const Stratum& s, const StratumPoint& pt) {
    if (classify(s) != StratumType::TypeY) throw std::invalid_argument("tau_y needs a type Y stratum");
    const KnotGraph& c = s.collapsed;
    int v = -1, v1 = -1;
    for (int u = c.num_base; u < c.num_vertices(); ++u) {
        if (c.degree(u) == 1) {
            int nb = c.neighbors(u)[0];
            if (c.is_inner(nb) && c.degree(nb) == 3) {
                v = u;
                v1 = nb;
                break;
            }
        }
    }
    if (v < 0) throw std::logic_error("type Y vertex pair not found");
    std::vector<int> others;
    for (int w : c.neighbors(v1))
        if (w != v) others.push_back(w);
    StratumPoint out = pt;
    Vec3 sum = pt.collapsed[others[0]] + pt.collapsed[others[1]];
    out.collapsed[v] = sum - pt.collapsed[v];
    out.collapsed[v1] = sum - pt.collapsed[v1];
    return out;
}

/// Renormalizes the univalent inner vertex to distance 2*max-extent from its
/// neighbor along the unchanged direction. Idempotent.
inline StratumPoint tau1(const Stratum& s, const StratumPoint& pt) {
    if (classify(s) != StratumType::TypeI) throw std::invalid_argument("tau1 needs a type I stratum");
    const KnotGraph& c = s.collapsed;
    int v = -1, w = -1;
    for (int u = c.num_base; u < c.num_vertices(); ++u) {
        if (c.degree(u) != 1) continue;
        int nb = c.neighbors(u)[0];
        if (c.is_inner(nb) && c.degree(nb) != 1 && c.degree(nb) != 3) {
            v = u;
            w = nb;
            break;
        }
    }
    if (v < 0) throw std::logic_error("type I vertex not found");
    double ext = detail::max_pairwise(pt.collapsed, {v});
    if (ext == 0.0) throw std::domain_error("tau1: collapsed configuration has zero extent");
    Vec3 dir = pt.collapsed[v] - pt.collapsed[w];
    double len = dir.norm();
    if (len == 0.0) throw std::domain_error("tau1: univalent vertex coincides with its neighbor");
    StratumPoint out = pt;
    out.collapsed[v] = pt.collapsed[w] + dir * (2.0 * ext / len);
    return out;
}

/// Edge identification: the quotient configuration together with the
/// projective class of the collapsed edge's direction.
inline std::pair<Placement, Vec3> tau3(const Stratum& s, const StratumPoint& pt) {
    if (classify(s) != StratumType::TypeIII) throw std::invalid_argument("tau3 needs a type III stratum");
    const KnotGraph& c = s.collapsed;
    Vec3 dir = edge_direction(c, 0, pt.collapsed);
    if (dir.x < 0 || (dir.x == 0 && (dir.y < 0 || (dir.y == 0 && dir.z < 0)))) dir = -dir;
    return {pt.quotient, dir};
}

/// Non-edge identification: the bundle projection onto the quotient.
inline Placement tau4(const Stratum& s, const StratumPoint& pt) {
    if (classify(s) != StratumType::TypeIV) throw std::invalid_argument("tau4 needs a type IV stratum");
    return pt.quotient;
}

/// Collar of the stratum inside the parent configuration space: the collapsed
/// piece is grafted at the merge vertex with size t. As t -> 0 the Gauss map
/// converges to the pair of boundary Gauss maps.
inline Placement collar(const Stratum& s, const StratumPoint& pt, double t) {
    if (t <= 0.0) throw std::invalid_argument("collar parameter must be positive");
    // anchor: minimal base point of A when present, else minimal inner vertex
    int anchor_parent = s.a.front();
    for (int v : s.a)
        if (s.parent.is_base(v)) {
            anchor_parent = v;
            break;
        }
    int anchor = s.parent_to_collapsed[anchor_parent];
    double ext = detail::max_pairwise(pt.collapsed);
    if (ext == 0.0) throw std::domain_error("collar: collapsed configuration has zero extent");
    Vec3 at = pt.quotient[s.quotient_new_vertex];
    Placement out(s.parent.num_vertices());
    for (int v = 0; v < s.parent.num_vertices(); ++v) {
        if (!s.in_a(v)) {
            out[v] = pt.quotient[s.parent_to_quotient[v]];
        } else {
            int cv = s.parent_to_collapsed[v];
            out[v] = at + (pt.collapsed[cv] - pt.collapsed[anchor]) * (t / ext);
        }
    }
    return out;
}

/// Gauss image of a stratum point under a parent edge ordering: quotient edges
/// contribute their quotient directions, collapsed edges their infinitesimal
/// directions.
inline GaussImage stratum_gauss_map(const Stratum& s, const EdgeOrdering& o,
                                    const StratumPoint& pt) {
    GaussImage im;
    im.directions.reserve(o.size());
    for (int pos = 0; pos < o.size(); ++pos) {
        int e = o.positions[pos];
        if (s.edge_part[e] == Stratum::Part::Quotient)
            im.directions.push_back(edge_direction(s.quotient, s.edge_image[e], pt.quotient));
        else
            im.directions.push_back(edge_direction(s.collapsed, s.edge_image[e], pt.collapsed));
    }
    return im;
}

/// An ordering of the split edge set. Tokens 0..k1-1 are quotient edges,
/// k1..k1+k2-1 are collapsed edges (k1 = quotient edge count).
struct SplitOrdering {
    std::vector<int> positions;
    int quotient_edges = 0;
};

/// Pushes a parent edge ordering through the stratum decomposition so the
/// composite placement map is unchanged position by position.
inline SplitOrdering relabel(const EdgeOrdering& o, const Stratum& s) {
    SplitOrdering out;
    out.quotient_edges = s.quotient.num_edges();
    out.positions.resize(o.size());
    for (int pos = 0; pos < o.size(); ++pos) {
        int e = o.positions[pos];
        out.positions[pos] = s.edge_part[e] == Stratum::Part::Quotient
                                 ? s.edge_image[e]
                                 : out.quotient_edges + s.edge_image[e];
    }
    return out;
}

/// Left action of a permutation on orderings: position p of the result reads
/// from position sigma[p] of the input.
inline EdgeOrdering act(const std::vector<int>& sigma, const EdgeOrdering& o) {
    EdgeOrdering out;
    out.positions.resize(o.positions.size());
    for (size_t p = 0; p < o.positions.size(); ++p) out.positions[p] = o.positions[sigma[p]];
    return out;
}

inline SplitOrdering act(const std::vector<int>& sigma, const SplitOrdering& o) {
    SplitOrdering out;
    out.quotient_edges = o.quotient_edges;
    out.positions.resize(o.positions.size());
    for (size_t p = 0; p < o.positions.size(); ++p) out.positions[p] = o.positions[sigma[p]];
    return out;
}

/// All vertex subsets that define valid strata of `g` (size >= 2, interval
/// condition on base points).
inline std::vector<std::vector<int>> admissible_strata_sets(const KnotGraph& g) {
    std::vector<std::vector<int>> out;
    int n = g.num_vertices();
    if (n > 20) throw std::invalid_argument("diagram too large for stratum enumeration");
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> a;
        for (int v = 0; v < n; ++v)
            if (mask & (1u << v)) a.push_back(v);
        if (a.size() < 2) continue;
        std::vector<int> bases;
        for (int v : a)
            if (g.is_base(v)) bases.push_back(v);
        bool interval = true;
        for (size_t i = 1; i < bases.size(); ++i)
            if (bases[i] != bases[i - 1] + 1) interval = false;
        if (!interval) continue;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace feynknot

#endif
