#ifndef FEYNKNOT_DIAGRAM_HPP
#define FEYNKNOT_DIAGRAM_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace feynknot {

/// A knot graph: base points carrying a linear order, inner vertices carrying
/// their own total order, and a multiset of edges between distinct vertices.
///
/// Vertices are indexed 0..m-1 (base points, in linear order) followed by
/// m..m+s-1 (inner vertices, in inner order). `names` keeps the external
/// labels for I/O; all algorithms work on indices.
struct KnotGraph {
    int num_base = 0;
    int num_inner = 0;
    std::vector<std::pair<int, int>> edges;  // each pair normalized (lo, hi)
    std::vector<std::string> names;          // size num_base + num_inner

    int num_vertices() const { return num_base + num_inner; }
    int num_edges() const { return static_cast<int>(edges.size()); }
    bool is_base(int v) const { return v < num_base; }
    bool is_inner(int v) const { return v >= num_base; }

    int degree(int v) const {
        int d = 0;
        for (auto& e : edges) d += (e.first == v) + (e.second == v);
        return d;
    }

    std::vector<int> neighbors(int v) const {
        std::vector<int> out;
        for (auto& e : edges) {
            if (e.first == v) out.push_back(e.second);
            else if (e.second == v) out.push_back(e.first);
        }
        return out;
    }

    void add_edge(int a, int b) {
        if (a == b) throw std::invalid_argument("edge endpoints must be distinct");
        if (a < 0 || b < 0 || a >= num_vertices() || b >= num_vertices())
            throw std::invalid_argument("edge endpoint out of range");
        edges.emplace_back(std::min(a, b), std::max(a, b));
    }

    void default_names() {
        names.clear();
        for (int i = 0; i < num_base; ++i) names.push_back("b" + std::to_string(i + 1));
        for (int i = 0; i < num_inner; ++i) names.push_back("y" + std::to_string(i + 1));
    }

    int index_of(const std::string& name) const {
        for (int i = 0; i < num_vertices(); ++i)
            if (names[i] == name) return i;
        throw std::invalid_argument("unknown vertex name: " + name);
    }

    void validate() const {
        if (static_cast<int>(names.size()) != num_vertices())
            throw std::invalid_argument("name list does not match vertex count");
        std::set<std::string> seen(names.begin(), names.end());
        if (static_cast<int>(seen.size()) != num_vertices())
            throw std::invalid_argument("duplicate vertex labels");
        for (auto& e : edges)
            if (e.first == e.second || e.first < 0 || e.second >= num_vertices())
                throw std::invalid_argument("invalid edge");
    }
};

inline KnotGraph make_graph(int num_base, int num_inner,
                            std::vector<std::pair<int, int>> edges) {
    KnotGraph g;
    g.num_base = num_base;
    g.num_inner = num_inner;
    g.default_names();
    for (auto& e : edges) g.add_edge(e.first, e.second);
    return g;
}

/// Witness for equivalence of two knot graphs: a vertex bijection that is the
/// identity on base positions and maps inner vertices to inner vertices while
/// matching the edge multisets.
struct Equivalence {
    std::vector<int> vertex_map;  // index in lhs -> index in rhs
};

inline int order(const KnotGraph& g) { return g.num_edges() - g.num_inner; }

/// No free vertex, no univalent inner vertex, no bivalent inner vertex.
inline bool is_normal(const KnotGraph& g) {
    for (int v = 0; v < g.num_vertices(); ++v) {
        int d = g.degree(v);
        if (d == 0) return false;
        if (g.is_inner(v) && d < 3) return false;
    }
    return true;
}

namespace detail {

inline std::vector<std::pair<int, int>> sorted_edges(std::vector<std::pair<int, int>> e) {
    std::sort(e.begin(), e.end());
    return e;
}

/// Applies an inner permutation to the edges of `g`. `perm[i]` is the image of
/// inner vertex i (0-based within the inner block).
inline std::vector<std::pair<int, int>> permuted_edges(const KnotGraph& g,
                                                       const std::vector<int>& perm) {
    std::vector<std::pair<int, int>> out;
    out.reserve(g.edges.size());
    for (auto& e : g.edges) {
        int a = e.first, b = e.second;
        if (g.is_inner(a)) a = g.num_base + perm[a - g.num_base];
        if (g.is_inner(b)) b = g.num_base + perm[b - g.num_base];
        out.emplace_back(std::min(a, b), std::max(a, b));
    }
    return out;
}

}  // namespace detail

/// All self-equivalences. The base map is forced (an order-preserving
/// self-bijection of a chain is the identity), so only inner permutations are
/// searched.
inline std::vector<Equivalence> automorphisms(const KnotGraph& g) {
    std::vector<Equivalence> out;
    auto ref = detail::sorted_edges(g.edges);
    std::vector<int> perm(g.num_inner);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        if (detail::sorted_edges(detail::permuted_edges(g, perm)) == ref) {
            Equivalence eq;
            eq.vertex_map.resize(g.num_vertices());
            for (int i = 0; i < g.num_base; ++i) eq.vertex_map[i] = i;
            for (int i = 0; i < g.num_inner; ++i)
                eq.vertex_map[g.num_base + i] = g.num_base + perm[i];
            out.push_back(std::move(eq));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

inline std::optional<Equivalence> are_equivalent(const KnotGraph& a, const KnotGraph& b) {
    if (a.num_base != b.num_base || a.num_inner != b.num_inner ||
        a.num_edges() != b.num_edges())
        return std::nullopt;
    auto ref = detail::sorted_edges(b.edges);
    std::vector<int> perm(a.num_inner);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        if (detail::sorted_edges(detail::permuted_edges(a, perm)) == ref) {
            Equivalence eq;
            eq.vertex_map.resize(a.num_vertices());
            for (int i = 0; i < a.num_base; ++i) eq.vertex_map[i] = i;
            for (int i = 0; i < a.num_inner; ++i)
                eq.vertex_map[a.num_base + i] = a.num_base + perm[i];
            return eq;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::nullopt;
}

/// Canonical class key: base/inner counts plus the lexicographically smallest
/// edge encoding over all inner relabelings. Equal keys iff equivalent.
inline std::string canonical_key(const KnotGraph& g) {
    std::vector<std::pair<int, int>> best;
    std::vector<int> perm(g.num_inner);
    std::iota(perm.begin(), perm.end(), 0);
    bool first = true;
    do {
        auto e = detail::sorted_edges(detail::permuted_edges(g, perm));
        if (first || e < best) {
            best = std::move(e);
            first = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::ostringstream os;
    os << "m" << g.num_base << "s" << g.num_inner << ":";
    for (size_t i = 0; i < best.size(); ++i) {
        if (i) os << ",";
        auto label = [&](int v) {
            return v < g.num_base ? "b" + std::to_string(v + 1)
                                  : "y" + std::to_string(v - g.num_base + 1);
        };
        os << label(best[i].first) << "-" << label(best[i].second);
    }
    return os.str();
}

struct Split {
    std::vector<int> left_edges;   // edge indices of the first part
    std::vector<int> right_edges;  // edge indices of the second part
    std::optional<int> shared_base;
};

/// A split partitions the edge multiset into two nonempty parts whose vertex
/// sets are disjoint or meet in exactly one base point, and whose base points
/// do not interleave along the base order (each part must be removable as a
/// block of the linear order). Returns the first split found.
inline std::optional<Split> is_splittable(const KnotGraph& g) {
    int k = g.num_edges();
    if (k < 2) return std::nullopt;
    for (unsigned mask = 1; mask + 1 < (1u << k); ++mask) {
        std::set<int> lv, rv;
        for (int i = 0; i < k; ++i) {
            auto& e = g.edges[i];
            if (mask & (1u << i)) {
                lv.insert(e.first);
                lv.insert(e.second);
            } else {
                rv.insert(e.first);
                rv.insert(e.second);
            }
        }
        std::vector<int> common;
        for (int v : lv)
            if (rv.count(v)) common.push_back(v);
        if (common.size() > 1) continue;
        if (common.size() == 1 && !g.is_base(common[0])) continue;
        // base points of the two parts must not alternate along the order
        bool interleave = false;
        for (int a = 0; a < g.num_base && !interleave; ++a)
            for (int b = a + 1; b < g.num_base && !interleave; ++b)
                for (int c = b + 1; c < g.num_base && !interleave; ++c)
                    for (int d = c + 1; d < g.num_base; ++d) {
                        bool away = lv.count(a) && !rv.count(a);
                        bool cway = lv.count(c) && !rv.count(c);
                        bool bway = rv.count(b) && !lv.count(b);
                        bool dway = rv.count(d) && !lv.count(d);
                        bool alt1 = away && bway && cway && dway;
                        bool alt2 = (rv.count(a) && !lv.count(a)) && (lv.count(b) && !rv.count(b)) &&
                                    (rv.count(c) && !lv.count(c)) && (lv.count(d) && !rv.count(d));
                        if (alt1 || alt2) {
                            interleave = true;
                            break;
                        }
                    }
        if (interleave) continue;
        Split sp;
        for (int i = 0; i < k; ++i)
            ((mask & (1u << i)) ? sp.left_edges : sp.right_edges).push_back(i);
        if (common.size() == 1) sp.shared_base = common[0];
        return sp;
    }
    return std::nullopt;
}

/// Connectivity with consecutive base points joined through the underlying
/// curve. Diagrams without base points fall back to plain graph connectivity.
inline bool is_connected_through_base(const KnotGraph& g) {
    int n = g.num_vertices();
    if (n == 0) return true;
    std::vector<std::vector<int>> adj(n);
    for (auto& e : g.edges) {
        adj[e.first].push_back(e.second);
        adj[e.second].push_back(e.first);
    }
    for (int b = 0; b + 1 < g.num_base; ++b) {
        adj[b].push_back(b + 1);
        adj[b + 1].push_back(b);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

/// True when every inner vertex reaches some base point through the graph.
inline bool inner_vertices_reach_base(const KnotGraph& g) {
    if (g.num_inner == 0) return true;
    if (g.num_base == 0) return false;
    int n = g.num_vertices();
    std::vector<std::vector<int>> adj(n);
    for (auto& e : g.edges) {
        adj[e.first].push_back(e.second);
        adj[e.second].push_back(e.first);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack;
    for (int b = 0; b < g.num_base; ++b) {
        seen[b] = 1;
        stack.push_back(b);
    }
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    for (int v = g.num_base; v < n; ++v)
        if (!seen[v]) return false;
    return true;
}

struct EnumerateOptions {
    bool connected_only = false;        // connectivity through the base order
    bool require_base_points = false;
    bool include_splittable = false;
};

namespace detail {

inline void enumerate_edge_multisets(const KnotGraph& proto,
                                     const std::vector<std::pair<int, int>>& pairs,
                                     int k, int start, std::vector<int>& chosen,
                                     std::vector<int>& deg,
                                     const std::function<void(const std::vector<int>&)>& emit) {
    if (static_cast<int>(chosen.size()) == k) {
        for (int v = 0; v < proto.num_vertices(); ++v) {
            int need = proto.is_inner(v) ? 3 : 1;
            if (deg[v] < need) return;
        }
        emit(chosen);
        return;
    }
    int remaining = k - static_cast<int>(chosen.size());
    // prune on remaining degree deficiency
    int deficiency = 0;
    for (int v = 0; v < proto.num_vertices(); ++v) {
        int need = proto.is_inner(v) ? 3 : 1;
        deficiency += std::max(0, need - deg[v]);
    }
    if (deficiency > 2 * remaining) return;
    for (int p = start; p < static_cast<int>(pairs.size()); ++p) {
        chosen.push_back(p);
        ++deg[pairs[p].first];
        ++deg[pairs[p].second];
        enumerate_edge_multisets(proto, pairs, k, p, chosen, deg, emit);
        --deg[pairs[p].first];
        --deg[pairs[p].second];
        chosen.pop_back();
    }
}

}  // namespace detail

/// One representative per equivalence class of normal knot graphs of the given
/// order with at most `max_edges` edges. Splittable diagrams are dropped
/// unless requested. Output order is stable: by (edges, base, key).
inline std::vector<KnotGraph> enumerate_diagrams(int n, int max_edges,
                                                 const EnumerateOptions& opt = {}) {
    if (n <= 0) throw std::invalid_argument("diagram order must be positive");
    std::map<std::string, KnotGraph> classes;
    for (int k = 1; k <= max_edges; ++k) {
        int s = k - n;
        if (s < 0) continue;
        // degree feasibility: 2k >= m + 3s
        int max_base = 2 * k - 3 * s;
        for (int m = (opt.require_base_points ? 1 : 0); m <= max_base; ++m) {
            if (m == 0 && s == 0) continue;
            KnotGraph proto;
            proto.num_base = m;
            proto.num_inner = s;
            proto.default_names();
            std::vector<std::pair<int, int>> pairs;
            for (int a = 0; a < proto.num_vertices(); ++a)
                for (int b = a + 1; b < proto.num_vertices(); ++b) pairs.emplace_back(a, b);
            std::vector<int> chosen, deg(proto.num_vertices(), 0);
            std::function<void(const std::vector<int>&)> emit =
                [&](const std::vector<int>& sel) {
                    KnotGraph g = proto;
                    for (int p : sel) g.edges.push_back(pairs[p]);
                    if (!is_normal(g)) return;
                    if (opt.connected_only && !is_connected_through_base(g)) return;
                    if (!opt.include_splittable && is_splittable(g)) return;
                    std::string key = canonical_key(g);
                    classes.emplace(std::move(key), std::move(g));
                };
            detail::enumerate_edge_multisets(proto, pairs, k, 0, chosen, deg, emit);
        }
    }
    std::vector<KnotGraph> out;
    out.reserve(classes.size());
    std::vector<std::pair<std::tuple<int, int, std::string>, const KnotGraph*>> ordered;
    for (auto& [key, g] : classes)
        ordered.emplace_back(std::make_tuple(g.num_edges(), g.num_base, key), &g);
    std::sort(ordered.begin(), ordered.end(),
              [](auto& a, auto& b) { return a.first < b.first; });
    for (auto& [_, g] : ordered) out.push_back(*g);
    return out;
}

}  // namespace feynknot

#endif
