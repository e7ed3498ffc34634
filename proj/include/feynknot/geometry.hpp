#ifndef FEYNKNOT_GEOMETRY_HPP
#define FEYNKNOT_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "feynknot/core.hpp"
#include "feynknot/diagram.hpp"
#include "feynknot/rng.hpp"

namespace feynknot {

/// Closed curve in R^3, either one of the named parametric knots or a closed
/// polygon parametrized proportionally to arc length. Parameter t is taken
/// mod 1; the base-point order along the curve follows increasing t.
class KnotCurve {
public:
    enum class Kind { Unknot, Trefoil, TrefoilAlt, Figure8, Torus, Polygon };

    static KnotCurve unknot() { return KnotCurve(Kind::Unknot); }
    static KnotCurve trefoil() { return KnotCurve(Kind::Trefoil); }
    /// Trefoil under a fixed rigid rotation and parameter shift; same knot,
    /// different parametrization, for isotopy-invariance checks.
    static KnotCurve trefoil_alt() { return KnotCurve(Kind::TrefoilAlt); }
    static KnotCurve figure8() { return KnotCurve(Kind::Figure8); }
    static KnotCurve torus(int p, int q) {
        KnotCurve c(Kind::Torus);
        c.p_ = p;
        c.q_ = q;
        return c;
    }
    static KnotCurve polygon(std::vector<Vec3> pts) {
        if (pts.size() < 3) throw std::invalid_argument("polygon needs at least 3 points");
        KnotCurve c(Kind::Polygon);
        c.pts_ = std::move(pts);
        c.build_polygon_tables();
        c.check_polygon_embedding();
        return c;
    }
    static KnotCurve named(const std::string& name) {
        if (name == "unknot") return unknot();
        if (name == "trefoil") return trefoil();
        if (name == "trefoil_alt") return trefoil_alt();
        if (name == "figure8") return figure8();
        // torus(p,q)
        if (name.rfind("torus(", 0) == 0 && name.back() == ')') {
            auto comma = name.find(',');
            if (comma != std::string::npos) {
                int p = std::stoi(name.substr(6, comma - 6));
                int q = std::stoi(name.substr(comma + 1, name.size() - comma - 2));
                if (p != 0 && q != 0) return torus(p, q);
            }
        }
        throw std::invalid_argument("unknown knot name: " + name);
    }

    Kind kind() const { return kind_; }

    Vec3 point(double t) const {
        t = wrap(t);
        switch (kind_) {
            case Kind::Unknot:
                return {std::cos(kTwoPi * t), std::sin(kTwoPi * t), 0.0};
            case Kind::Trefoil: {
                double a = kTwoPi * t;
                return {std::sin(a) + 2.0 * std::sin(2.0 * a),
                        std::cos(a) - 2.0 * std::cos(2.0 * a), -std::sin(3.0 * a)};
            }
            case Kind::TrefoilAlt: {
                Vec3 p = trefoil().point(t + 0.37);
                return rigid(p);
            }
            case Kind::Figure8: {
                double a = kTwoPi * t;
                return {(2.0 + std::cos(2.0 * a)) * std::cos(3.0 * a),
                        (2.0 + std::cos(2.0 * a)) * std::sin(3.0 * a), std::sin(4.0 * a)};
            }
            case Kind::Torus: {
                double a = kTwoPi * t;
                double r = 2.0 + std::cos(q_ * a);
                return {r * std::cos(p_ * a), r * std::sin(p_ * a), std::sin(q_ * a)};
            }
            case Kind::Polygon:
                return polygon_point(t);
        }
        throw std::logic_error("unreachable");
    }

    /// dk/dt (not normalized). Exact for parametric curves, piecewise constant
    /// for polygons.
    Vec3 derivative(double t) const {
        t = wrap(t);
        switch (kind_) {
            case Kind::Unknot:
                return {-kTwoPi * std::sin(kTwoPi * t), kTwoPi * std::cos(kTwoPi * t), 0.0};
            case Kind::Trefoil: {
                double a = kTwoPi * t;
                return Vec3{std::cos(a) + 4.0 * std::cos(2.0 * a),
                            -std::sin(a) + 4.0 * std::sin(2.0 * a), -3.0 * std::cos(3.0 * a)} *
                       kTwoPi;
            }
            case Kind::TrefoilAlt: {
                Vec3 d = trefoil().derivative(t + 0.37);
                return rigid_linear(d);
            }
            case Kind::Figure8: {
                double a = kTwoPi * t;
                double r = 2.0 + std::cos(2.0 * a);
                double dr = -2.0 * std::sin(2.0 * a);
                return Vec3{dr * std::cos(3.0 * a) - 3.0 * r * std::sin(3.0 * a),
                            dr * std::sin(3.0 * a) + 3.0 * r * std::cos(3.0 * a),
                            4.0 * std::cos(4.0 * a)} *
                       kTwoPi;
            }
            case Kind::Torus: {
                double a = kTwoPi * t;
                double r = 2.0 + std::cos(q_ * a);
                double dr = -q_ * std::sin(q_ * a);
                return Vec3{dr * std::cos(p_ * a) - p_ * r * std::sin(p_ * a),
                            dr * std::sin(p_ * a) + p_ * r * std::cos(p_ * a),
                            q_ * std::cos(q_ * a)} *
                       kTwoPi;
            }
            case Kind::Polygon:
                return polygon_derivative(t);
        }
        throw std::logic_error("unreachable");
    }

    Vec3 tangent(double t) const {
        Vec3 d = derivative(t);
        double n = d.norm();
        if (n == 0.0) throw std::domain_error("zero-length curve derivative");
        return d / n;
    }

    Vec3 centroid() const {
        Vec3 c{};
        const int n = 256;
        for (int i = 0; i < n; ++i) c += point(static_cast<double>(i) / n);
        return c / n;
    }

    double diameter() const {
        const int n = 128;
        double d = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                d = std::max(d, distance(point(static_cast<double>(i) / n),
                                         point(static_cast<double>(j) / n)));
        return d;
    }

    const std::vector<Vec3>& polygon_points() const { return pts_; }

private:
    explicit KnotCurve(Kind k) : kind_(k) {}

    static double wrap(double t) {
        t = std::fmod(t, 1.0);
        return t < 0.0 ? t + 1.0 : t;
    }

    // fixed rigid motion used by the alternate trefoil parametrization
    static Vec3 rigid_linear(const Vec3& v) {
        Vec3 r = rotate_z(v, 0.9);
        double c = std::cos(0.4), s = std::sin(0.4);  // rotation about x
        return {r.x, c * r.y - s * r.z, s * r.y + c * r.z};
    }
    static Vec3 rigid(const Vec3& v) { return rigid_linear(v) + Vec3{0.3, -0.2, 0.5}; }

    void build_polygon_tables() {
        cum_.assign(pts_.size() + 1, 0.0);
        for (size_t i = 0; i < pts_.size(); ++i) {
            size_t j = (i + 1) % pts_.size();
            cum_[i + 1] = cum_[i] + distance(pts_[i], pts_[j]);
        }
        if (cum_.back() <= 0.0) throw std::invalid_argument("degenerate polygon");
    }

    void check_polygon_embedding() const {
        size_t n = pts_.size();
        for (size_t i = 0; i < n; ++i) {
            if (distance(pts_[i], pts_[(i + 1) % n]) == 0.0)
                throw std::invalid_argument("polygon has a zero-length segment");
            for (size_t j = i + 1; j < n; ++j) {
                if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
                if (segment_distance(pts_[i], pts_[(i + 1) % n], pts_[j], pts_[(j + 1) % n]) <= 0.0)
                    throw std::invalid_argument("polygon segments intersect");
            }
        }
    }

    static double segment_distance(const Vec3& p1, const Vec3& p2, const Vec3& q1,
                                   const Vec3& q2) {
        // minimum distance between two segments
        Vec3 d1 = p2 - p1, d2 = q2 - q1, r = p1 - q1;
        double a = d1.dot(d1), e = d2.dot(d2), f = d2.dot(r);
        double s = 0.0, t = 0.0;
        double c = d1.dot(r), b = d1.dot(d2);
        double denom = a * e - b * b;
        if (denom > 1e-30) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
        t = e > 1e-30 ? std::clamp((b * s + f) / e, 0.0, 1.0) : 0.0;
        s = a > 1e-30 ? std::clamp((b * t - c) / a, 0.0, 1.0) : 0.0;
        return distance(p1 + d1 * s, q1 + d2 * t);
    }

    Vec3 polygon_point(double t) const {
        double target = t * cum_.back();
        size_t lo = std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin();
        size_t i = std::min(lo == 0 ? 0 : lo - 1, pts_.size() - 1);
        double seg = cum_[i + 1] - cum_[i];
        double u = seg > 0.0 ? (target - cum_[i]) / seg : 0.0;
        size_t j = (i + 1) % pts_.size();
        return pts_[i] + (pts_[j] - pts_[i]) * u;
    }

    Vec3 polygon_derivative(double t) const {
        // central difference of the arc-length parametrization
        const double h = 1e-6;
        return (polygon_point(wrap(t + h)) - polygon_point(wrap(t - h))) / (2.0 * h);
    }

    Kind kind_;
    int p_ = 2, q_ = 3;
    std::vector<Vec3> pts_;
    std::vector<double> cum_;
};

/// Placement of a diagram on a knot: strictly increasing base parameters in
/// [0,1) and free inner vertices.
struct Configuration {
    std::vector<double> base_params;
    std::vector<Vec3> inner;
};

/// Placement of a diagram on the oriented line through `axis`: base points at
/// heights along the line, inner vertices free in R^3.
struct LineConfiguration {
    Vec3 axis{0.0, 0.0, 1.0};
    std::vector<double> base_heights;
    std::vector<Vec3> inner;
};

/// Vertex positions indexed like the diagram (base block then inner block).
using Placement = std::vector<Vec3>;

inline Placement place(const KnotGraph& g, const KnotCurve& curve, const Configuration& c) {
    if (static_cast<int>(c.base_params.size()) != g.num_base ||
        static_cast<int>(c.inner.size()) != g.num_inner)
        throw std::invalid_argument("configuration does not match diagram");
    Placement p(g.num_vertices());
    for (int i = 0; i < g.num_base; ++i) p[i] = curve.point(c.base_params[i]);
    for (int i = 0; i < g.num_inner; ++i) p[g.num_base + i] = c.inner[i];
    return p;
}

inline Placement place(const KnotGraph& g, const LineConfiguration& c) {
    if (static_cast<int>(c.base_heights.size()) != g.num_base ||
        static_cast<int>(c.inner.size()) != g.num_inner)
        throw std::invalid_argument("configuration does not match diagram");
    Placement p(g.num_vertices());
    for (int i = 0; i < g.num_base; ++i) p[i] = c.axis * c.base_heights[i];
    for (int i = 0; i < g.num_inner; ++i) p[g.num_base + i] = c.inner[i];
    return p;
}

/// An ordering of a diagram's edge multiset: position -> edge index.
struct EdgeOrdering {
    std::vector<int> positions;

    static EdgeOrdering identity(const KnotGraph& g) {
        EdgeOrdering o;
        o.positions.resize(g.num_edges());
        for (int i = 0; i < g.num_edges(); ++i) o.positions[i] = i;
        return o;
    }
    int size() const { return static_cast<int>(positions.size()); }
};

/// One unit direction per edge position, oriented from the lower-indexed to
/// the higher-indexed endpoint, plus the induced projective classes (the
/// direction up to sign).
struct GaussImage {
    std::vector<Vec3> directions;

    /// Canonical representative of the projective class of direction i: the
    /// sign is fixed so the first nonzero component is positive.
    Vec3 projective(int i) const {
        Vec3 d = directions[i];
        if (d.x < 0 || (d.x == 0 && (d.y < 0 || (d.y == 0 && d.z < 0)))) d = -d;
        return d;
    }
};

inline Vec3 edge_direction(const KnotGraph& g, int edge_index, const Placement& p) {
    auto [v, w] = g.edges[edge_index];
    Vec3 u = p[v] - p[w];
    double n = u.norm();
    if (n < 1e-300) throw std::domain_error("degenerate edge in configuration");
    return u / n;
}

inline GaussImage gauss_map(const KnotGraph& g, const EdgeOrdering& o, const Placement& p) {
    if (o.size() != g.num_edges()) throw std::invalid_argument("ordering does not match diagram");
    GaussImage im;
    im.directions.reserve(o.size());
    for (int pos = 0; pos < o.size(); ++pos)
        im.directions.push_back(edge_direction(g, o.positions[pos], p));
    return im;
}

inline GaussImage gauss_map(const KnotGraph& g, const EdgeOrdering& o, const KnotCurve& curve,
                            const Configuration& c) {
    return gauss_map(g, o, place(g, curve, c));
}

/// Rotates a z-axis line configuration about the axis. Base heights are fixed
/// by construction.
inline LineConfiguration rotate(const LineConfiguration& c, double angle) {
    if (std::fabs(c.axis.x) > 1e-12 || std::fabs(c.axis.y) > 1e-12)
        throw std::invalid_argument("rotate expects a z-axis configuration");
    LineConfiguration out = c;
    for (auto& v : out.inner) v = rotate_z(v, angle);
    return out;
}

/// Canonical representative under translation along the axis and dilation:
/// lowest base height 0 (or centroid height 0 without base points) and
/// maximum pairwise vertex distance 1.
inline LineConfiguration td_normalize(const LineConfiguration& c) {
    std::vector<Vec3> all;
    for (double h : c.base_heights) all.push_back(c.axis * h);
    for (auto& v : c.inner) all.push_back(v);
    if (all.size() < 2) throw std::invalid_argument("td_normalize needs at least two vertices");
    double extent = 0.0;
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i + 1; j < all.size(); ++j) extent = std::max(extent, distance(all[i], all[j]));
    if (extent == 0.0) throw std::domain_error("all vertices coincide");
    double shift;
    if (!c.base_heights.empty()) {
        shift = *std::min_element(c.base_heights.begin(), c.base_heights.end());
    } else {
        shift = 0.0;
        for (auto& v : c.inner) shift += v.dot(c.axis);
        shift /= static_cast<double>(c.inner.size());
    }
    LineConfiguration out;
    out.axis = c.axis;
    for (double h : c.base_heights) out.base_heights.push_back((h - shift) / extent);
    for (auto& v : c.inner) out.inner.push_back((v - c.axis * shift) / extent);
    return out;
}

// ---------------------------------------------------------------------------
// Sampling. Base parameters are uniform on the ordered simplex; inner vertices
// come from a heavy-tailed radial proposal mixed over fixed anchor points on
// the knot, so the density is known in closed form and positive on all of R^3.
// ---------------------------------------------------------------------------

class InnerProposal {
public:
    struct Component {
        Vec3 center;
        double sigma;
    };

    explicit InnerProposal(std::vector<Component> components)
        : components_(std::move(components)) {
        if (components_.empty()) throw std::invalid_argument("empty proposal mixture");
        for (auto& c : components_)
            if (c.sigma <= 0.0) throw std::invalid_argument("proposal scale must be positive");
    }

    InnerProposal(const std::vector<Vec3>& centers, double sigma) {
        for (auto& c : centers) components_.push_back({c, sigma});
        if (components_.empty()) throw std::invalid_argument("empty proposal mixture");
        if (sigma <= 0.0) throw std::invalid_argument("proposal scale must be positive");
    }

    /// Two-scale mixture along the curve: a diffuse component covering the
    /// whole knot and a tight component hugging it (where the integrand
    /// concentrates). Extra centers can be appended before sampling.
    static InnerProposal for_curve(const KnotCurve& curve, int num_centers = 32) {
        double diam = std::max(curve.diameter(), 1e-3);
        std::vector<Component> comps;
        comps.reserve(static_cast<size_t>(2 * num_centers));
        for (int i = 0; i < num_centers; ++i) {
            Vec3 p = curve.point(static_cast<double>(i) / num_centers);
            comps.push_back({p, 0.5 * diam});
            comps.push_back({p, diam / 16.0});
        }
        return InnerProposal(std::move(comps));
    }

    /// Centers spread along the unit segment of the line through `axis`.
    static InnerProposal for_axis(const Vec3& axis, int num_centers = 8) {
        std::vector<Component> comps;
        for (int i = 0; i < num_centers; ++i) {
            Vec3 p = axis * (static_cast<double>(i) / (num_centers - 1));
            comps.push_back({p, 1.0});
            comps.push_back({p, 1.0 / 8.0});
        }
        return InnerProposal(std::move(comps));
    }

    void add_center(const Vec3& p, double sigma_wide, double sigma_tight) {
        components_.push_back({p, sigma_wide});
        components_.push_back({p, sigma_tight});
    }

    Vec3 sample(Rng& rng) const {
        size_t j = static_cast<size_t>(rng.uniform() * static_cast<double>(components_.size()));
        j = std::min(j, components_.size() - 1);
        double r = rng.half_cauchy(components_[j].sigma);
        return components_[j].center + rng.sphere() * r;
    }

    /// Exact density of `sample` with respect to Lebesgue measure on R^3.
    double density(const Vec3& y) const {
        double q = 0.0;
        for (auto& c : components_) {
            double rho = distance(y, c.center);
            rho = std::max(rho, 1e-9);  // radial density is integrable at 0
            double fr = (2.0 / kPi) * c.sigma / (c.sigma * c.sigma + rho * rho);
            q += fr / (kFourPi * rho * rho);
        }
        return q / static_cast<double>(components_.size());
    }

private:
    std::vector<Component> components_;
};

/// Draws a configuration together with the exact proposal density.
inline std::pair<Configuration, double> sample_configuration(const KnotGraph& g,
                                                             const KnotCurve&,
                                                             const InnerProposal& proposal,
                                                             Rng& rng) {
    Configuration c;
    c.base_params.resize(g.num_base);
    for (int i = 0; i < g.num_base; ++i) c.base_params[i] = rng.uniform();
    std::sort(c.base_params.begin(), c.base_params.end());
    double density = 1.0;
    for (int i = 2; i <= g.num_base; ++i) density *= static_cast<double>(i);  // m! on the simplex
    c.inner.resize(g.num_inner);
    for (int i = 0; i < g.num_inner; ++i) {
        c.inner[i] = proposal.sample(rng);
        density *= proposal.density(c.inner[i]);
    }
    return {std::move(c), density};
}

inline std::pair<Configuration, double> sample_configuration(const KnotGraph& g,
                                                             const KnotCurve& curve,
                                                             std::uint64_t seed) {
    Rng rng(seed);
    auto proposal = InnerProposal::for_curve(curve);
    return sample_configuration(g, curve, proposal, rng);
}

}  // namespace feynknot

#endif
