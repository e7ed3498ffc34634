#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "feynknot/bundle.hpp"
#include "feynknot/diagram.hpp"
#include "feynknot/rng.hpp"

using namespace feynknot;
using namespace std::complex_literals;

namespace {

KnotGraph tripod() { return make_graph(3, 1, {{0, 3}, {1, 3}, {2, 3}}); }

HeightFunction heights(std::vector<double> v) {
    HeightFunction h;
    h.values = std::move(v);
    return h;
}

/// Swaps two adjacent inner labels of a diagram (and a height function on it).
std::pair<KnotGraph, HeightFunction> swap_inner(const KnotGraph& g, const HeightFunction& h,
                                                int r) {
    int a = g.num_base + (r - 1), b = a + 1;
    std::vector<int> relab(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) relab[v] = v == a ? b : v == b ? a : v;
    KnotGraph out;
    out.num_base = g.num_base;
    out.num_inner = g.num_inner;
    out.names.resize(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) out.names[relab[v]] = g.names[v];
    for (auto& e : g.edges) out.add_edge(relab[e.first], relab[e.second]);
    HeightFunction hh;
    hh.values.resize(h.values.size());
    for (int v = 0; v < g.num_vertices(); ++v) hh.values[relab[v]] = h.values[v];
    return {out, hh};
}

std::vector<KnotGraph> bundle_pool(int max_order) {
    EnumerateOptions opt;
    opt.include_splittable = true;
    std::vector<KnotGraph> out;
    for (int n = 1; n <= max_order; ++n)
        for (auto& g : enumerate_diagrams(n, 3 * n, opt))
            if (g.num_base > 0 && g.num_inner > 0 && inner_vertices_reach_base(g))
                out.push_back(g);
    return out;
}

}  // namespace

TEST_CASE("height metric") {
    // path v - y - w with heights (0, 1, 3)
    KnotGraph path = make_graph(2, 1, {{0, 2}, {1, 2}});
    HeightFunction h = heights({0.0, 3.0, 1.0});
    CHECK(h_metric(path, h, 0, 1) == doctest::Approx(3.0));

    // triangle with heights (0, 5, 1): direct edge wins over the detour
    KnotGraph tri = make_graph(2, 1, {{0, 1}, {0, 2}, {1, 2}});
    HeightFunction ht = heights({0.0, 5.0, 1.0});
    CHECK(h_metric(tri, ht, 0, 1) == doctest::Approx(5.0));

    KnotGraph disc = make_graph(2, 2, {{0, 1}, {2, 3}, {2, 3}, {2, 3}});
    HeightFunction hd = heights({0.0, 1.0, 0.3, 0.9});
    CHECK_THROWS_AS(h_metric(disc, hd, 0, 2), std::domain_error);
}

TEST_CASE("height metric triangle inequality and edge Lipschitz bound") {
    Rng rng(3);
    auto pool = bundle_pool(2);
    for (auto& g : pool) {
        if (!is_connected_through_base(g)) continue;
        for (int rep = 0; rep < 5; ++rep) {
            HeightFunction h = random_height(g, rng);
            int n = g.num_vertices();
            std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
            bool connected = true;
            for (int v = 0; v < n && connected; ++v)
                for (int w = 0; w < n; ++w) {
                    try {
                        d[v][w] = v == w ? 0.0 : h_metric(g, h, v, w);
                    } catch (const std::domain_error&) {
                        connected = false;
                        break;
                    }
                }
            if (!connected) continue;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        CHECK(d[a][b] <= d[a][c] + d[c][b] + 1e-12);
            for (auto& e : g.edges)
                for (int v = 0; v < n; ++v)
                    CHECK(std::fabs(d[v][e.first] - d[v][e.second]) <=
                          std::fabs(h[e.first] - h[e.second]) + 1e-12);
        }
    }
}

TEST_CASE("tripod ground basis") {
    KnotGraph t = tripod();
    HeightFunction h = heights({0.0, 1.0, 2.0, 0.5});
    GroundBasis gb = ground_basis(t, h);
    REQUIRE(gb.basis.size() == 1);
    // cone radius d(h, y) = 0.5 through b1
    CHECK(gb.basis[0][3].real() == doctest::Approx(0.5));
    for (int b = 0; b < 3; ++b) CHECK(std::abs(gb.basis[0][b]) == doctest::Approx(0.0));
    // theta column (1, -1, -1/3)
    CHECK(gb.theta(0, 0).real() == doctest::Approx(1.0));
    CHECK(gb.theta(1, 0).real() == doctest::Approx(-1.0));
    CHECK(gb.theta(2, 0).real() == doctest::Approx(-1.0 / 3.0));
    // column norm bounded by sqrt(k)
    double n2 = 0.0;
    for (int r = 0; r < 3; ++r) n2 += std::norm(gb.theta(r, 0));
    CHECK(std::sqrt(n2) == doctest::Approx(std::sqrt(1.0 + 1.0 + 1.0 / 9.0)));
    CHECK(std::sqrt(n2) <= std::sqrt(3.0));

    // inner vertex isolated from the base points
    KnotGraph iso = make_graph(2, 2, {{0, 1}, {2, 3}, {2, 3}, {2, 3}});
    HeightFunction hiso = heights({0.0, 1.0, 0.2, 0.9});
    CHECK_THROWS_AS(ground_basis(iso, hiso), std::invalid_argument);
}

TEST_CASE("psi") {
    KnotGraph t = tripod();
    HeightFunction h = heights({0.0, 1.0, 2.0, 0.5});
    GroundFunction g;
    g.values = {0.0, 0.0, 0.0, 1.0i};
    auto coords = psi(t, EdgeOrdering::identity(t), g, h);
    CHECK(std::abs(coords[0] - 2.0i) < 1e-15);
    CHECK(std::abs(coords[1] + 2.0i) < 1e-15);
    CHECK(std::abs(coords[2] + 2.0i / 3.0) < 1e-15);

    // linearity
    Rng rng(8);
    GroundFunction g2;
    g2.values = {0.0, 0.0, 0.0, complex{rng.uniform(), rng.uniform()}};
    complex c1{0.3, -1.2}, c2{2.0, 0.7};
    GroundFunction lin;
    lin.values.resize(4);
    for (int v = 0; v < 4; ++v) lin.values[v] = c1 * g.values[v] + c2 * g2.values[v];
    auto a = psi(t, EdgeOrdering::identity(t), lin, h);
    auto b1 = psi(t, EdgeOrdering::identity(t), g, h);
    auto b2 = psi(t, EdgeOrdering::identity(t), g2, h);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(a[i] - (c1 * b1[i] + c2 * b2[i])) < 1e-12);

    // zero ground function maps to zero
    GroundFunction zero;
    zero.values.assign(4, complex{});
    for (auto& z : psi(t, EdgeOrdering::identity(t), zero, h)) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("psi is invariant under translation-dilation of (g, h)") {
    Rng rng(12);
    for (auto& g : bundle_pool(2)) {
        HeightFunction h = random_height(g, rng);
        GroundFunction gr;
        gr.values.resize(g.num_vertices());
        for (int v = g.num_base; v < g.num_vertices(); ++v)
            gr.values[v] = complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double lambda = 2.7, t = -0.9;
        HeightFunction h2 = h;
        GroundFunction gr2 = gr;
        for (int v = 0; v < g.num_vertices(); ++v) {
            h2[v] = lambda * h[v] + t;
            gr2.values[v] = lambda * gr.values[v];
        }
        auto a = psi(g, EdgeOrdering::identity(g), gr, h);
        auto b = psi(g, EdgeOrdering::identity(g), gr2, h2);
        for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
    }
}

TEST_CASE("rotation multiplies every psi coordinate by one unit complex number") {
    Rng rng(13);
    KnotGraph g = tripod();
    HeightFunction h = random_height(g, rng);
    GroundFunction gr;
    gr.values = {0.0, 0.0, 0.0, complex{0.4, -1.1}};
    double theta = 1.234;
    complex rot = std::polar(1.0, theta);
    GroundFunction gr2 = gr;
    gr2.values[3] *= rot;
    auto a = psi(g, EdgeOrdering::identity(g), gr, h);
    auto b = psi(g, EdgeOrdering::identity(g), gr2, h);
    for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - rot * a[i]) < 1e-12);
}

TEST_CASE("trivialization injectivity") {
    Rng rng(21);
    for (auto& g : bundle_pool(2)) {
        for (int rep = 0; rep < 100; ++rep) {
            HeightFunction h = random_height(g, rng);
            GroundBasis gb = ground_basis(g, h);
            double sigma = check_injective(gb);
            CHECK(sigma > 0.0);
            // gram determinant cross-check: |det(theta^H theta)| equals the
            // product of its eigenvalues
            CMatrix gram = gb.theta.adjoint() * gb.theta;
            auto ev = hermitian_eigenvalues(gram);
            double prod = 1.0;
            for (double e : ev) prod *= e;
            double dt = std::abs(det(gram));
            CHECK(dt == doctest::Approx(prod).epsilon(1e-6));
            CHECK(sigma * sigma == doctest::Approx(ev.front()).epsilon(1e-9));
            // column norms bounded by sqrt(k)
            for (int c = 0; c < gb.theta.cols(); ++c) {
                double n2 = 0.0;
                for (int r = 0; r < gb.theta.rows(); ++r) n2 += std::norm(gb.theta(r, c));
                CHECK(std::sqrt(n2) <= std::sqrt(static_cast<double>(g.num_edges())) + 1e-12);
            }
        }
    }
    // duplicated column is detected as a violation
    KnotGraph t = tripod();
    GroundBasis gb = ground_basis(t, heights({0.0, 1.0, 2.0, 0.5}));
    CMatrix twice(3, 2);
    for (int r = 0; r < 3; ++r) twice(r, 0) = twice(r, 1) = gb.theta(r, 0);
    GroundBasis fake = gb;
    fake.theta = twice;
    CHECK(check_injective(fake) < 1e-12);
}

TEST_CASE("single inner vertex basis is positive on its own vertex") {
    Rng rng(31);
    KnotGraph t = tripod();
    for (int rep = 0; rep < 50; ++rep) {
        HeightFunction h = random_height(t, rng);
        GroundBasis gb = ground_basis(t, h);
        CHECK(gb.basis[0][3].real() > 0.0);
    }
}

TEST_CASE("isotopy determinants stay positive along the blend") {
    Rng rng(32);
    for (auto& g : bundle_pool(2)) {
        if (g.num_inner < 2) continue;
        for (int rep = 0; rep < 25; ++rep) {
            HeightFunction h = random_height(g, rng);
            for (int r = 1; r <= g.num_inner - 1; ++r) {
                IsotopyCheck chk = isotopy_check(g, h, r);
                for (size_t i = 0; i < chk.determinant.size(); ++i) {
                    CHECK(chk.determinant[i] > 0.0);
                    CHECK(chk.determinant[i] ==
                          doctest::Approx(chk.closed_form[i]).epsilon(1e-8));
                }
                // endpoint t = 1 reproduces the plain ground basis
                GroundBasis gb = ground_basis(g, h);
                Matrix G(g.num_inner, g.num_inner);
                for (int i = 0; i < g.num_inner; ++i)
                    for (int j = 0; j < g.num_inner; ++j)
                        G(i, j) = gb.basis[i][g.num_base + j].real();
                CHECK(chk.determinant.back() == doctest::Approx(det(G)).epsilon(1e-9));
                // t = 0 is shared with the transposed inner order
                auto [g2, h2] = swap_inner(g, h, r);
                IsotopyCheck chk2 = isotopy_check(g2, h2, r);
                CHECK(chk.determinant.front() ==
                      doctest::Approx(chk2.determinant.front()).epsilon(1e-9));
            }
        }
    }
    KnotGraph t = tripod();
    CHECK_THROWS_AS(isotopy_check(t, heights({0, 1, 2, 0.5}), 1), std::invalid_argument);
}

TEST_CASE("type II transition structure") {
    // collapsed diagram: b1-y1, y1-y2, y2-b2 with y1 minimal and bivalent
    KnotGraph c = make_graph(2, 2, {{0, 2}, {2, 3}, {1, 3}});
    Rng rng(41);
    for (int rep = 0; rep < 200; ++rep) {
        HeightFunction h = random_height(c, rng);
        TransitionMap tm = transition_type2(c, h);
        REQUIRE(tm.raw.rows() == 2);
        // first column is exactly -e1
        CHECK(tm.raw(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK(std::fabs(tm.raw(1, 0)) < 1e-9);
        // other columns: identity below the first row, correction bounded by 2
        CHECK(tm.raw(1, 1) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::fabs(tm.raw(0, 1)) <= 2.0 + 1e-9);
        // normalized form
        CHECK(tm.normalized(0, 0) == -1.0);
        CHECK(tm.normalized(1, 1) == 1.0);
        CHECK(tm.normalized(0, 1) == 0.0);
        CHECK(tm.normalized(1, 0) == 0.0);
    }
}

TEST_CASE("type II transition on a larger collapsed diagram") {
    // b1-y1, y1-b2, y2-y3 wired to the bases so every inner vertex reaches them
    KnotGraph c = make_graph(3, 3, {{0, 3}, {1, 3}, {2, 4}, {4, 5}, {2, 5}, {1, 4}});
    REQUIRE(c.degree(3) == 2);  // y1 bivalent and minimal
    Rng rng(42);
    for (int rep = 0; rep < 200; ++rep) {
        HeightFunction h = random_height(c, rng);
        TransitionMap tm = transition_type2(c, h);
        int s = tm.raw.rows();
        CHECK(tm.raw(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
        for (int j = 1; j < s; ++j) CHECK(std::fabs(tm.raw(j, 0)) < 1e-8);
        for (int i = 1; i < s; ++i) {
            CHECK(std::fabs(tm.raw(0, i)) <= 2.0 + 1e-8);
            for (int j = 1; j < s; ++j)
                CHECK(tm.raw(j, i) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("type I transition structure") {
    // univalent y1 attached to a four-valent inner vertex
    KnotGraph c = make_graph(3, 2, {{3, 4}, {0, 4}, {1, 4}, {2, 4}});
    REQUIRE(c.degree(3) == 1);
    Rng rng(43);
    for (int rep = 0; rep < 200; ++rep) {
        HeightFunction h = random_height(c, rng);
        TransitionMap tm = transition_type1(c, h);
        int s = tm.raw.rows();
        // unitriangular: first column e1 exactly, identity elsewhere
        CHECK(tm.raw(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
        for (int j = 1; j < s; ++j) CHECK(std::fabs(tm.raw(j, 0)) < 1e-8);
        for (int i = 1; i < s; ++i)
            for (int j = 1; j < s; ++j)
                CHECK(tm.raw(j, i) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
        // normalized map is the identity
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j)
                CHECK(tm.normalized(i, j) == (i == j ? 1.0 : 0.0));
    }
}

TEST_CASE("type Y transition flips the reflected pair") {
    // univalent y1 attached to the trivalent inner vertex y2
    KnotGraph c = make_graph(2, 2, {{2, 3}, {0, 3}, {1, 3}});
    Rng rng(44);
    for (int rep = 0; rep < 200; ++rep) {
        HeightFunction h = random_height(c, rng);
        TransitionMap tm = transition_type_y(c, h);
        CHECK(tm.raw(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
        CHECK(std::fabs(tm.raw(1, 0)) < 1e-8);
        CHECK_NOTHROW(to_signed_perm(tm.normalized));
        CHECK(tm.normalized(0, 0) == -1.0);
        CHECK(tm.normalized(1, 1) == -1.0);
    }

    // reflected pair followed by a third inner vertex: the raw matrix is
    // triangular once the pair leads the inner order, diag (-1, -1, +1)
    KnotGraph c3 = make_graph(1, 3, {{0, 3}, {1, 2}, {2, 3}, {2, 3}});
    REQUIRE(c3.degree(1) == 1);
    REQUIRE(c3.degree(2) == 3);
    for (int rep = 0; rep < 200; ++rep) {
        HeightFunction h = random_height(c3, rng);
        TransitionMap tm = transition_type_y(c3, h);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) CHECK(std::fabs(tm.raw(j, i)) < 1e-8);
        CHECK(tm.raw(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
        CHECK(tm.raw(1, 1) == doctest::Approx(-1.0).epsilon(1e-8));
        CHECK(tm.raw(2, 2) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(tm.normalized(0, 0) == -1.0);
        CHECK(tm.normalized(1, 1) == -1.0);
        CHECK(tm.normalized(2, 2) == 1.0);
    }

    // without the pair leading the order the normal form is not defined
    KnotGraph mixed = make_graph(1, 3, {{0, 2}, {1, 3}, {2, 3}, {2, 3}});
    HeightFunction h;
    h.values = {0.0637, 0.7003, 0.5917, 0.5261};
    CHECK_THROWS_AS(transition_type_y(mixed, h), std::invalid_argument);
}

TEST_CASE("type III transition sign") {
    KnotGraph t = tripod();
    Stratum s = make_stratum(t, {0, 3});
    HeightFunction up = heights({0.0, 1.0, 2.0, 0.5});  // h(y) > h(b1)
    TransitionMap a = transition_type3(s, up);
    CHECK(a.raw(0, 0) == 1.0);
    HeightFunction down = heights({0.0, 1.0, 2.0, -0.5});  // h(y) < h(b1)
    TransitionMap b = transition_type3(s, down);
    CHECK(b.raw(0, 0) == -1.0);
    for (int i = 1; i < b.raw.rows(); ++i) CHECK(b.raw(i, i) == 1.0);
}

TEST_CASE("boundary family with base points in the collapsed part") {
    // parent: two joined tripod feet, A = {b3, b4, y2}
    KnotGraph g = make_graph(4, 2, {{0, 4}, {1, 4}, {2, 5}, {3, 5}, {4, 5}});
    Stratum s = make_stratum(g, {2, 3, 5});
    REQUIRE(s.collapsed.num_base == 2);
    REQUIRE(s.quotient.num_inner == 1);  // y1 survives
    Rng rng(51);
    HeightFunction h1 = random_height(s.quotient, rng, 0.05, 1e-3);
    HeightFunction h2 = random_height(s.collapsed, rng, 0.05, 1e-3);

    // q-side inner vertex of the parent and its quotient image
    int y1_parent = 4, y2_parent = 5;
    int y1_quotient = s.parent_to_quotient[y1_parent];
    GroundBasis qb = ground_basis(s.quotient, h1);
    int y1_col = -1;
    for (size_t i = 0; i < qb.inner_ids.size(); ++i)
        if (qb.inner_ids[i] == y1_quotient) y1_col = static_cast<int>(i);
    REQUIRE(y1_col >= 0);

    double prev_err = 1e9;
    for (double lambda : {1e-2, 1e-4, 1e-6}) {
        HeightFunction hl = boundary_family(s, h1, h2, lambda);
        GroundBasis pb = ground_basis(s.parent, hl);
        // outside column converges to the quotient basis off the collapsed set
        double err = 0.0;
        for (int v = 0; v < g.num_vertices(); ++v) {
            double expect = s.in_a(v)
                                ? qb.basis[y1_col][s.quotient_new_vertex].real()
                                : qb.basis[y1_col][s.parent_to_quotient[v]].real();
            int col = -1;
            for (size_t i = 0; i < pb.inner_ids.size(); ++i)
                if (pb.inner_ids[i] == y1_parent) col = static_cast<int>(i);
            err = std::max(err, std::fabs(pb.basis[col][v].real() - expect));
        }
        CHECK(err <= prev_err + 1e-12);
        if (lambda == 1e-6) CHECK(err < 1e-6);
        prev_err = err;

        // the collapsed-side column restricted to A matches the collapsed
        // basis after translation-dilation normalization
        GroundBasis cb = ground_basis(s.collapsed, h2);
        int y2_col_parent = -1;
        for (size_t i = 0; i < pb.inner_ids.size(); ++i)
            if (pb.inner_ids[i] == y2_parent) y2_col_parent = static_cast<int>(i);
        double scale = boundary_scale(s, h1, h2, lambda);
        int y2_collapsed = s.parent_to_collapsed[y2_parent];
        int y2_col_collapsed = -1;
        for (size_t i = 0; i < cb.inner_ids.size(); ++i)
            if (cb.inner_ids[i] == y2_collapsed) y2_col_collapsed = static_cast<int>(i);
        for (int v = 0; v < g.num_vertices(); ++v) {
            if (!s.in_a(v)) continue;
            double normalized = pb.basis[y2_col_parent][v].real() / scale;
            double expect = cb.basis[y2_col_collapsed][s.parent_to_collapsed[v]].real();
            CHECK(normalized == doctest::Approx(expect).epsilon(1e-6));
        }
        // and vanishes outside A in the limit
        for (int v = 0; v < g.num_vertices(); ++v)
            if (!s.in_a(v) && lambda == 1e-6)
                CHECK(std::fabs(pb.basis[y2_col_parent][v].real()) < 1e-6);
    }

    // a collapsed block squeezed between base neighbors degenerates when the
    // scale is too large: {b1, b2} inside the four-point chord diagram
    KnotGraph x = make_graph(4, 0, {{0, 2}, {1, 3}});
    Stratum sx = make_stratum(x, {0, 1});
    HeightFunction hx1 = heights({0.0, 0.5, 1.0});  // quotient a, b3, b4
    HeightFunction hx2 = heights({0.0, 1.0});       // collapsed b1, b2
    CHECK_THROWS_AS(boundary_family(sx, hx1, hx2, 1e6), std::domain_error);
    CHECK_NOTHROW(boundary_family(sx, hx1, hx2, 1e-3));
}

TEST_CASE("boundary family with an inner-only collapsed part") {
    // y1 joins the bases; y2 < y3 collapse (double edge)
    KnotGraph g = make_graph(2, 3, {{0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 4}});
    Stratum s = make_stratum(g, {3, 4});
    REQUIRE(s.collapsed.num_base == 0);
    REQUIRE(s.collapsed.num_inner == 2);
    // the merge vertex sits at the position of the maximal collapsed vertex
    CHECK(s.quotient.names[s.quotient_new_vertex] == "a");

    Rng rng(52);
    HeightFunction h1 = random_height(s.quotient, rng, 0.05, 1e-3);
    HeightFunction h2 = random_height(s.collapsed, rng, 0.05, 1e-3);

    GroundBasis qb = ground_basis(s.quotient, h1);
    int y1_parent = 2;
    int y2_parent = 3;  // minimal collapsed inner vertex
    int ybar = s.quotient_new_vertex;

    double prev_out = 1e9;
    for (double lambda : {1e-2, 1e-4, 1e-6}) {
        HeightFunction hl = boundary_family(s, h1, h2, lambda);
        GroundBasis pb = ground_basis(s.parent, hl);
        auto col_of = [&](const GroundBasis& basis, int vertex) {
            for (size_t i = 0; i < basis.inner_ids.size(); ++i)
                if (basis.inner_ids[i] == vertex) return static_cast<int>(i);
            return -1;
        };

        // outside column y1 converges to the quotient values
        int c1 = col_of(pb, y1_parent);
        int q1 = col_of(qb, s.parent_to_quotient[y1_parent]);
        double err = 0.0;
        for (int v = 0; v < g.num_vertices(); ++v) {
            double expect = s.in_a(v) ? qb.basis[q1][ybar].real()
                                      : qb.basis[q1][s.parent_to_quotient[v]].real();
            err = std::max(err, std::fabs(pb.basis[c1][v].real() - expect));
        }
        CHECK(err <= prev_out + 1e-12);
        if (lambda == 1e-6) CHECK(err < 1e-6);
        prev_out = err;

        // maximal collapsed vertex behaves like the merge vertex
        int cr = col_of(pb, g.num_base + 2);  // y3 column
        int qr = col_of(qb, ybar);
        for (int v = 0; v < g.num_vertices(); ++v)
            if (!s.in_a(v) && lambda == 1e-6)
                CHECK(pb.basis[cr][v].real() ==
                      doctest::Approx(qb.basis[qr][s.parent_to_quotient[v]].real())
                          .epsilon(1e-5));

        // y2 column: exactly zero off A for small lambda and the collapsed
        // basis on A after normalization
        int c2 = col_of(pb, y2_parent);
        for (int v = 0; v < g.num_vertices(); ++v)
            if (!s.in_a(v)) CHECK(pb.basis[c2][v].real() == 0.0);
        GroundBasis cb = ground_basis(s.collapsed, h2);
        double scale = boundary_scale(s, h1, h2, lambda);
        for (int v = 0; v < g.num_vertices(); ++v) {
            if (!s.in_a(v)) continue;
            double normalized = pb.basis[c2][v].real() / scale;
            double expect = cb.basis[0][s.parent_to_collapsed[v]].real();
            CHECK(normalized == doctest::Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("modified basis restriction vanishes and stays independent") {
    KnotGraph g = make_graph(2, 3, {{0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 4}});
    Stratum s = make_stratum(g, {3, 4});
    Rng rng(53);
    HeightFunction h1 = random_height(s.quotient, rng, 0.05, 1e-3);
    HeightFunction h2 = random_height(s.collapsed, rng, 0.05, 1e-3);
    EdgeOrdering o = EdgeOrdering::identity(g);

    double prev = 1e18;
    for (double lambda : {1e-2, 1e-4, 1e-6}) {
        GroundBasis mb = modified_basis(s, h1, h2, lambda, o);
        GroundBasis pb = ground_basis(s.parent, boundary_family(s, h1, h2, lambda), o);
        double scale = boundary_scale(s, h1, h2, lambda);
        // restriction norms of the outside columns shrink monotonically
        double worst = 0.0;
        for (size_t c = 0; c < mb.basis.size(); ++c) {
            if (s.in_a(mb.inner_ids[c])) continue;
            worst = std::max(worst, collapsed_restriction_norm(s, mb.basis[c], scale));
        }
        CHECK(worst <= prev + 1e-12);
        prev = worst;
        if (lambda == 1e-6) CHECK(worst < 1e-4);

        // edge coordinates away from the collapsed part are untouched
        for (int pos = 0; pos < o.size(); ++pos) {
            auto& e = g.edges[o.positions[pos]];
            bool internal = s.in_a(e.first) && s.in_a(e.second);
            if (internal) continue;
            for (size_t c = 0; c < mb.basis.size(); ++c)
                if (!s.in_a(mb.inner_ids[c]))
                    CHECK(std::abs(mb.theta(pos, static_cast<int>(c)) -
                                   pb.theta(pos, static_cast<int>(c))) < 1e-12);
        }

        // still a basis
        CHECK(smallest_singular_value(mb.theta) > 0.0);
    }
}

TEST_CASE("structure group certificate") {
    auto pool = bundle_pool(2);
    StructureGroupReport report = structure_group(pool, 400, 99);
    CHECK(report.ok());
    CHECK(report.strata_sampled > 0);
    for (auto& ps : report.groups) {
        CHECK(ps.group_order >= 1);
        CHECK(ps.divides);
        CHECK(ps.ambient_order % ps.group_order == 0);
        for (auto& sp : ps.generators) {
            // signed permutation sanity: images form a permutation
            std::vector<char> seen(sp.size(), 0);
            for (int v : sp) {
                int img = std::abs(v) - 1;
                REQUIRE(img >= 0);
                REQUIRE(img < static_cast<int>(sp.size()));
                CHECK(!seen[img]);
                seen[img] = 1;
            }
        }
    }

    // a non signed-permutation matrix is rejected
    Matrix bad = Matrix::identity(2);
    bad(0, 1) = 0.5;
    CHECK_THROWS_AS(to_signed_perm(bad), std::domain_error);

    // hyperoctahedral orders
    CHECK(hyperoctahedral_order(1) == 2);
    CHECK(hyperoctahedral_order(2) == 8);
    CHECK(hyperoctahedral_order(3) == 48);
}

TEST_CASE("signed permutation closure") {
    // the two generators diag(-1,1) and the swap generate the full group of
    // signed 2x2 permutations
    Matrix flip = Matrix::identity(2);
    flip(0, 0) = -1.0;
    Matrix swap(2, 2);
    swap(0, 1) = 1.0;
    swap(1, 0) = 1.0;
    std::set<SignedPerm> gens{to_signed_perm(flip), to_signed_perm(swap)};
    CHECK(signed_perm_group_order(gens, 100) == 8);
}
