#ifndef FEYNKNOT_INVARIANTS_HPP
#define FEYNKNOT_INVARIANTS_HPP

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "feynknot/diagram.hpp"
#include "feynknot/geometry.hpp"
#include "feynknot/integrator.hpp"

namespace feynknot {

/// Integer weights on diagram equivalence classes, keyed by canonical form.
struct WeightSystem {
    int order = 0;
    std::map<std::string, long long> weights;
};

/// The order-2 weight system pairing the crossing-chord class against the
/// tripod class.
inline WeightSystem default_order2_weights() {
    WeightSystem ws;
    ws.order = 2;
    ws.weights[canonical_key(make_graph(4, 0, {{0, 2}, {1, 3}}))] = 1;
    ws.weights[canonical_key(make_graph(3, 1, {{0, 3}, {1, 3}, {2, 3}}))] = -1;
    return ws;
}

struct DiagramClassEstimate {
    KnotGraph graph;
    long long automorphism_count = 1;
    IntegralEstimate estimate;  // I(diagram, knot) / |automorphisms|
};

/// Per-class configuration-space integrals of order n, already divided by the
/// automorphism count. Only classes meeting the top-form condition carry an
/// integral.
inline std::map<std::string, DiagramClassEstimate> z_components(int n, const KnotCurve& curve,
                                                                long long samples,
                                                                std::uint64_t seed,
                                                                int threads = 1) {
    if (n < 1 || n > 2) throw std::invalid_argument("z_components supports orders 1 and 2");
    auto classes = enumerate_diagrams(n, 3 * n);
    std::map<std::string, DiagramClassEstimate> out;
    int index = 0;
    for (auto& g : classes) {
        if (!check_dimension(g)) {
            ++index;
            continue;
        }
        DiagramClassEstimate ce;
        ce.graph = g;
        ce.automorphism_count = static_cast<long long>(automorphisms(g).size());
        auto est = integrate_diagram(g, EdgeOrdering::identity(g), curve, samples,
                                     seed + 1000ull * static_cast<std::uint64_t>(index), threads);
        est.value /= static_cast<double>(ce.automorphism_count);
        est.stderr_value /= static_cast<double>(ce.automorphism_count);
        ce.estimate = est;
        out.emplace(canonical_key(g), std::move(ce));
        ++index;
    }
    return out;
}

/// Sum of weighted class integrals with errors combined in quadrature.
inline IntegralEstimate weighted_sum(const WeightSystem& ws,
                                     const std::map<std::string, DiagramClassEstimate>& comps) {
    IntegralEstimate total;
    double var = 0.0;
    for (auto& [key, w] : ws.weights) {
        if (w == 0) continue;
        auto it = comps.find(key);
        if (it == comps.end()) throw std::invalid_argument("weight system references a missing class: " + key);
        total.value += static_cast<double>(w) * it->second.estimate.value;
        double s = static_cast<double>(w) * it->second.estimate.stderr_value;
        var += s * s;
        total.samples += it->second.estimate.samples;
        total.rejected += it->second.estimate.rejected;
    }
    total.stderr_value = std::sqrt(var);
    return total;
}

struct NormalizedV2 {
    double value = 0.0;
    double stderr_value = 0.0;
    IntegralEstimate raw;        // F(K)
    IntegralEstimate unknot;     // F(unknot)
    IntegralEstimate trefoil;    // F(trefoil)
};

/// Normalizes a weighted sum against the unknot and trefoil references:
/// (F(K) - F(unknot)) / (F(trefoil) - F(unknot)), with first-order error
/// propagation through the ratio.
inline NormalizedV2 normalize_against_references(const IntegralEstimate& fk,
                                                 const IntegralEstimate& funknot,
                                                 const IntegralEstimate& ftrefoil) {
    NormalizedV2 out;
    out.raw = fk;
    out.unknot = funknot;
    out.trefoil = ftrefoil;
    double num = fk.value - funknot.value;
    double den = ftrefoil.value - funknot.value;
    double sden = std::hypot(ftrefoil.stderr_value, funknot.stderr_value);
    if (std::fabs(den) < 3.0 * sden)
        throw std::runtime_error("normalization denominator is consistent with zero");
    out.value = num / den;
    double da = 1.0 / den;
    double db = (num - den) / (den * den);  // d/d(unknot) of (a-b)/(c-b)
    double dc = -num / (den * den);
    double var = da * da * fk.stderr_value * fk.stderr_value +
                 db * db * funknot.stderr_value * funknot.stderr_value +
                 dc * dc * ftrefoil.stderr_value * ftrefoil.stderr_value;
    out.stderr_value = std::sqrt(var);
    return out;
}

/// Convention-free order-2 invariant. The same seed drives all three
/// evaluations, so the trefoil maps to 1 and the unknot to 0 exactly.
inline NormalizedV2 normalized_v2(const KnotCurve& curve, long long samples, std::uint64_t seed,
                                  int threads = 1) {
    WeightSystem ws = default_order2_weights();
    auto fk = weighted_sum(ws, z_components(2, curve, samples, seed, threads));
    auto fu = weighted_sum(ws, z_components(2, KnotCurve::unknot(), samples, seed, threads));
    auto ft = weighted_sum(ws, z_components(2, KnotCurve::trefoil(), samples, seed, threads));
    return normalize_against_references(fk, fu, ft);
}

// ---------------------------------------------------------------------------
// Independent order-2 oracle on signed Gauss codes.
// ---------------------------------------------------------------------------

/// Signed Gauss code, e.g. "O1+U2+O3+U1+O2+U3+": each crossing label appears
/// once as O and once as U, with a consistent sign.
struct GaussCode {
    struct Crossing {
        int over_pos = -1;
        int under_pos = -1;
        int sign = 0;
    };
    std::vector<Crossing> crossings;
    int length = 0;  // number of tokens

    static GaussCode parse(const std::string& text) {
        GaussCode code;
        std::map<int, Crossing> by_label;
        std::map<int, int> signs;
        size_t i = 0;
        int pos = 0;
        while (i < text.size()) {
            if (std::isspace(static_cast<unsigned char>(text[i]))) {
                ++i;
                continue;
            }
            char kind = text[i];
            if (kind != 'O' && kind != 'U')
                throw std::invalid_argument("gauss code: expected O or U");
            ++i;
            size_t start = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            if (start == i) throw std::invalid_argument("gauss code: missing crossing label");
            int label = std::stoi(text.substr(start, i - start));
            if (i >= text.size() || (text[i] != '+' && text[i] != '-'))
                throw std::invalid_argument("gauss code: missing sign");
            int sign = text[i] == '+' ? 1 : -1;
            ++i;
            auto& c = by_label[label];
            if (kind == 'O') {
                if (c.over_pos >= 0) throw std::invalid_argument("gauss code: duplicate over pass");
                c.over_pos = pos;
            } else {
                if (c.under_pos >= 0) throw std::invalid_argument("gauss code: duplicate under pass");
                c.under_pos = pos;
            }
            auto [it, inserted] = signs.emplace(label, sign);
            if (!inserted && it->second != sign)
                throw std::invalid_argument("gauss code: inconsistent crossing sign");
            c.sign = sign;
            ++pos;
        }
        for (auto& [label, c] : by_label) {
            if (c.over_pos < 0 || c.under_pos < 0)
                throw std::invalid_argument("gauss code: crossing must appear once over and once under");
            code.crossings.push_back(c);
        }
        code.length = pos;
        return code;
    }
};

/// Order-2 invariant by the arrow-pair count: over ordered pairs (c, d) the
/// pattern  U_c < O_d < O_c < U_d  along the code contributes sign(c)sign(d).
inline long long v2_oracle(const GaussCode& code) {
    long long total = 0;
    for (auto& c : code.crossings) {
        if (!(c.under_pos < c.over_pos)) continue;
        for (auto& d : code.crossings) {
            if (&c == &d) continue;
            if (c.under_pos < d.over_pos && d.over_pos < c.over_pos && c.over_pos < d.under_pos)
                total += static_cast<long long>(c.sign) * d.sign;
        }
    }
    return total;
}

inline long long v2_oracle(const std::string& text) { return v2_oracle(GaussCode::parse(text)); }

}  // namespace feynknot

#endif
