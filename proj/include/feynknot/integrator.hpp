#ifndef FEYNKNOT_INTEGRATOR_HPP
#define FEYNKNOT_INTEGRATOR_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "feynknot/core.hpp"
#include "feynknot/diagram.hpp"
#include "feynknot/geometry.hpp"
#include "feynknot/rng.hpp"

namespace feynknot {

struct IntegralEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
    long long samples = 0;
    long long rejected = 0;
    std::uint64_t seed = 0;
};

/// Top-form condition: the configuration space dimension m + 3s must match
/// the 2k pulled-back area forms.
inline bool check_dimension(const KnotGraph& g) {
    return g.num_base + 3 * g.num_inner == 2 * g.num_edges();
}

inline int default_thread_count() {
    if (const char* env = std::getenv("FEYNKNOT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Deterministic chunked Monte Carlo. Work is split into fixed chunks; chunk i
// draws from stream (seed, i) and partial moments are reduced in chunk order,
// so results are bit-identical for any worker count.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr long long kChunkSize = 8192;

struct ChunkMoments {
    double sum = 0.0;
    double sumsq = 0.0;
    long long rejected = 0;
};

template <class Fn>
IntegralEstimate mc_estimate(long long samples, std::uint64_t seed, int threads, Fn&& fn) {
    if (samples < 1) throw std::invalid_argument("sample count must be positive");
    threads = std::max(1, threads);
    long long num_chunks = (samples + kChunkSize - 1) / kChunkSize;
    std::vector<ChunkMoments> partial(static_cast<size_t>(num_chunks));

    auto run_chunk = [&](long long ci) {
        Rng rng(seed, static_cast<std::uint64_t>(ci));
        long long begin = ci * kChunkSize;
        long long count = std::min(kChunkSize, samples - begin);
        ChunkMoments m;
        for (long long i = 0; i < count; ++i) {
            std::optional<double> w = fn(rng);
            double v = 0.0;
            if (w)
                v = *w;
            else
                ++m.rejected;
            m.sum += v;
            m.sumsq += v * v;
        }
        partial[static_cast<size_t>(ci)] = m;
    };

    if (threads == 1 || num_chunks == 1) {
        for (long long ci = 0; ci < num_chunks; ++ci) run_chunk(ci);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
        int nw = static_cast<int>(std::min<long long>(threads, num_chunks));
        pool.reserve(static_cast<size_t>(nw));
        for (int t = 0; t < nw; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    long long ci = next.fetch_add(1);
                    if (ci >= num_chunks) break;
                    run_chunk(ci);
                }
            });
        for (auto& th : pool) th.join();
    }

    double sum = 0.0, sumsq = 0.0;
    long long rejected = 0;
    for (auto& m : partial) {
        sum += m.sum;
        sumsq += m.sumsq;
        rejected += m.rejected;
    }
    IntegralEstimate est;
    est.samples = samples;
    est.rejected = rejected;
    est.seed = seed;
    est.value = sum / static_cast<double>(samples);
    if (samples > 1) {
        double var = (sumsq - static_cast<double>(samples) * est.value * est.value) /
                     static_cast<double>(samples - 1);
        est.stderr_value = std::sqrt(std::max(0.0, var) / static_cast<double>(samples));
    }
    return est;
}

inline constexpr double kDegenerateEdge = 1e-12;

}  // namespace detail

// ---------------------------------------------------------------------------
// Integrand: density of the pulled-back product of unit-measure sphere forms
// with respect to the sampling coordinates. Rows come in pairs (one edge ->
// orthonormal tangent chart at its direction), columns are the configuration
// coordinates (base parameters then inner x,y,z in inner order).
//
// Orientation convention: each inner vertex flips the sign of its coordinate
// 3-form. This pins the relative orientation between diagrams with different
// inner-vertex counts so that the standard weight systems assemble an
// invariant; only the relative choice matters.
// ---------------------------------------------------------------------------

inline double orientation_sign(const KnotGraph& g) {
    return g.num_inner % 2 == 0 ? 1.0 : -1.0;
}

inline double integrand(const KnotGraph& g, const EdgeOrdering& o, const KnotCurve& curve,
                        const Configuration& c) {
    if (!check_dimension(g)) throw std::invalid_argument("diagram fails the top-form condition");
    int k = g.num_edges();
    int m = g.num_base;
    Placement p = place(g, curve, c);

    std::vector<Vec3> unit(static_cast<size_t>(k));
    std::vector<double> len(static_cast<size_t>(k));
    std::vector<TangentFrame> frame(static_cast<size_t>(k));
    for (int pos = 0; pos < k; ++pos) {
        auto [v, w] = g.edges[o.positions[pos]];
        Vec3 u = p[v] - p[w];
        double n = u.norm();
        if (n < detail::kDegenerateEdge) throw std::domain_error("degenerate edge");
        unit[pos] = u / n;
        len[pos] = n;
        frame[pos] = tangent_frame(unit[pos]);
    }

    std::vector<Vec3> dk(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) dk[j] = curve.derivative(c.base_params[j]);

    Matrix jac(2 * k, 2 * k);
    auto fill_edge_rows = [&](int pos, int col, const Vec3& du) {
        // d(direction) = (du - n (n . du)) / |u|
        const Vec3& n = unit[pos];
        Vec3 dn = (du - n * n.dot(du)) / len[pos];
        jac(2 * pos, col) = frame[pos].t1.dot(dn);
        jac(2 * pos + 1, col) = frame[pos].t2.dot(dn);
    };

    for (int pos = 0; pos < k; ++pos) {
        auto [v, w] = g.edges[o.positions[pos]];
        // base parameter columns
        if (v < m) fill_edge_rows(pos, v, dk[v]);
        if (w < m) fill_edge_rows(pos, w, -dk[w]);
        // inner coordinate columns
        static const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        if (v >= m)
            for (int ax = 0; ax < 3; ++ax) fill_edge_rows(pos, m + 3 * (v - m) + ax, axes[ax]);
        if (w >= m)
            for (int ax = 0; ax < 3; ++ax) fill_edge_rows(pos, m + 3 * (w - m) + ax, -axes[ax]);
    }

    double d = det(jac);
    return orientation_sign(g) * d / std::pow(kFourPi, k);
}

/// I(diagram, knot): importance-weighted mean of integrand/density over the
/// sampling proposal. Deterministic for a fixed seed and any thread count.
inline IntegralEstimate integrate_diagram(const KnotGraph& g, const EdgeOrdering& o,
                                          const KnotCurve& curve, long long samples,
                                          std::uint64_t seed, int threads = 1) {
    if (!check_dimension(g)) throw std::invalid_argument("diagram fails the top-form condition");
    const InnerProposal base_proposal = InnerProposal::for_curve(curve);
    const double diam = std::max(curve.diameter(), 1e-3);

    auto body = [&, g, o](Rng& rng) -> std::optional<double> {
        Configuration c;
        c.base_params.resize(g.num_base);
        for (int i = 0; i < g.num_base; ++i) c.base_params[i] = rng.uniform();
        std::sort(c.base_params.begin(), c.base_params.end());
        double density = 1.0;
        for (int i = 2; i <= g.num_base; ++i) density *= static_cast<double>(i);
        // extra proposal centers at the sampled base vertices, so the density
        // carries the same 1/r^2 growth as the integrand near vertex collisions
        InnerProposal proposal = base_proposal;
        for (double t : c.base_params)
            proposal.add_center(curve.point(t), 0.5 * diam, diam / 16.0);
        c.inner.resize(g.num_inner);
        for (int i = 0; i < g.num_inner; ++i) {
            c.inner[i] = proposal.sample(rng);
            density *= proposal.density(c.inner[i]);
        }
        try {
            return integrand(g, o, curve, c) / density;
        } catch (const std::domain_error&) {
            return std::nullopt;
        }
    };
    return detail::mc_estimate(samples, seed, threads, body);
}

// ---------------------------------------------------------------------------
// Collapsed (infinitesimal) configurations: the whole diagram concentrated on
// an oriented line through the origin, up to translation and dilation.
// ---------------------------------------------------------------------------

/// Gauge-fixed point of the line-configuration bundle over the sphere of
/// axes: first base height 0 and base extent 1 (for a single base point the
/// scale is fixed by placing the first inner vertex on the unit sphere).
struct CollapsedConfiguration {
    Vec3 axis{0, 0, 1};
    std::vector<double> heights;
    std::vector<Vec3> inner;
};

inline Placement place(const KnotGraph& g, const CollapsedConfiguration& c) {
    Placement p(g.num_vertices());
    for (int i = 0; i < g.num_base; ++i) p[i] = c.axis * c.heights[i];
    for (int i = 0; i < g.num_inner; ++i) p[g.num_base + i] = c.inner[i];
    return p;
}

/// Draws a collapsed configuration with exact density: axis uniform on the
/// sphere, free heights uniform on the ordered simplex, inner vertices from a
/// heavy-tailed proposal anchored along the base segment.
inline std::pair<CollapsedConfiguration, double> sample_collapsed(const KnotGraph& g, Rng& rng) {
    if (g.num_base < 1) throw std::invalid_argument("collapsed sampling needs base points");
    CollapsedConfiguration c;
    c.axis = rng.sphere();
    double density = 1.0 / kFourPi;  // per unit sphere area in the tangent chart
    int m = g.num_base;
    c.heights.assign(static_cast<size_t>(m), 0.0);
    if (m >= 2) {
        c.heights[static_cast<size_t>(m) - 1] = 1.0;
        if (m > 2) {
            std::vector<double> mid(static_cast<size_t>(m) - 2);
            for (auto& h : mid) h = rng.uniform();
            std::sort(mid.begin(), mid.end());
            for (int i = 0; i < m - 2; ++i) c.heights[static_cast<size_t>(i) + 1] = mid[static_cast<size_t>(i)];
            for (int i = 2; i <= m - 2; ++i) density *= static_cast<double>(i);
        }
    }
    c.inner.resize(static_cast<size_t>(g.num_inner));
    int first_free = 0;
    if (m == 1 && g.num_inner > 0) {
        c.inner[0] = rng.sphere();  // dilation gauge
        density *= 1.0 / kFourPi;
        first_free = 1;
    }
    if (g.num_inner > first_free) {
        std::vector<InnerProposal::Component> comps;
        auto add = [&](const Vec3& p) {
            comps.push_back({p, 1.0});
            comps.push_back({p, 1.0 / 8.0});
        };
        const int num_anchor = 8;
        for (int i = 0; i < num_anchor; ++i)
            add(c.axis * (static_cast<double>(i) / (num_anchor - 1)));
        for (int i = 0; i < m; ++i) add(c.axis * c.heights[static_cast<size_t>(i)]);
        if (m == 1 && g.num_inner > 0) add(c.inner[0]);
        InnerProposal proposal(std::move(comps));
        for (int i = first_free; i < g.num_inner; ++i) {
            c.inner[static_cast<size_t>(i)] = proposal.sample(rng);
            density *= proposal.density(c.inner[static_cast<size_t>(i)]);
        }
    }
    return {std::move(c), density};
}

/// Pullback-form density over the collapsed-configuration bundle, in the
/// gauge-fixed coordinates of `sample_collapsed`: two sphere-chart columns for
/// the axis, the free heights, then the inner coordinates.
inline double anomaly_integrand(const KnotGraph& g, const EdgeOrdering& o,
                                const CollapsedConfiguration& c) {
    if (!check_dimension(g)) throw std::invalid_argument("diagram fails the top-form condition");
    int k = g.num_edges();
    int m = g.num_base, s = g.num_inner;
    Placement p = place(g, c);

    std::vector<Vec3> unit(static_cast<size_t>(k));
    std::vector<double> len(static_cast<size_t>(k));
    std::vector<TangentFrame> frame(static_cast<size_t>(k));
    for (int pos = 0; pos < k; ++pos) {
        auto [v, w] = g.edges[o.positions[pos]];
        Vec3 u = p[v] - p[w];
        double n = u.norm();
        if (n < detail::kDegenerateEdge) throw std::domain_error("degenerate edge");
        unit[pos] = u / n;
        len[pos] = n;
        frame[pos] = tangent_frame(unit[pos]);
    }

    Matrix jac(2 * k, 2 * k);
    auto fill_edge_rows = [&](int pos, int col, const Vec3& du) {
        const Vec3& n = unit[pos];
        Vec3 dn = (du - n * n.dot(du)) / len[pos];
        jac(2 * pos, col) += frame[pos].t1.dot(dn);
        jac(2 * pos + 1, col) += frame[pos].t2.dot(dn);
    };

    TangentFrame axis_frame = tangent_frame(c.axis);
    TangentFrame gauge_frame{};
    bool sphere_gauge = (m == 1 && s > 0);
    if (sphere_gauge) gauge_frame = tangent_frame(c.inner[0].normalized());

    // column layout: [axis chart (2)] [free heights (m-2 if m>=2)]
    //                [inner: sphere chart (2) if gauged, then 3 per vertex]
    int height_cols = m >= 2 ? m - 2 : 0;
    auto vertex_columns = [&](int vtx, const std::function<void(int, const Vec3&)>& add) {
        // derivative of the position of `vtx` with respect to each column
        if (vtx < m) {
            double h = c.heights[static_cast<size_t>(vtx)];
            add(0, axis_frame.t1 * h);
            add(1, axis_frame.t2 * h);
            if (m >= 2 && vtx > 0 && vtx < m - 1) add(2 + (vtx - 1), c.axis);
        } else {
            int i = vtx - m;
            if (sphere_gauge && i == 0) {
                add(2 + height_cols, gauge_frame.t1);
                add(2 + height_cols + 1, gauge_frame.t2);
            } else {
                int base_col = 2 + height_cols + (sphere_gauge ? 2 : 0);
                int offset = sphere_gauge ? i - 1 : i;
                static const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
                for (int ax = 0; ax < 3; ++ax) add(base_col + 3 * offset + ax, axes[ax]);
            }
        }
    };

    for (int pos = 0; pos < k; ++pos) {
        auto [v, w] = g.edges[o.positions[pos]];
        vertex_columns(v, [&](int col, const Vec3& du) { fill_edge_rows(pos, col, du); });
        vertex_columns(w, [&](int col, const Vec3& du) { fill_edge_rows(pos, col, -du); });
    }

    double d = det(jac);
    return orientation_sign(g) * d / std::pow(kFourPi, k);
}

/// Bott-Taubes style integral over the bundle of collapsed configurations.
inline IntegralEstimate integrate_anomaly(const KnotGraph& g, const EdgeOrdering& o,
                                          long long samples, std::uint64_t seed,
                                          int threads = 1) {
    if (!check_dimension(g)) throw std::invalid_argument("diagram fails the top-form condition");
    if (g.num_base < 1) throw std::invalid_argument("anomaly integral needs base points");
    auto body = [g, o](Rng& rng) -> std::optional<double> {
        auto [c, density] = sample_collapsed(g, rng);
        try {
            return anomaly_integrand(g, o, c) / density;
        } catch (const std::domain_error&) {
            return std::nullopt;
        }
    };
    return detail::mc_estimate(samples, seed, threads, body);
}

}  // namespace feynknot

#endif
