#ifndef FEYNKNOT_JSON_IO_HPP
#define FEYNKNOT_JSON_IO_HPP

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "feynknot/diagram.hpp"
#include "feynknot/geometry.hpp"
#include "feynknot/invariants.hpp"

namespace feynknot {

using json = nlohmann::json;

/// {"base_points":["b1","b2"],"inner":["y1"],"edges":[["b1","y1"],...]}
/// The listed inner order is the diagram's inner order.
inline json diagram_to_json(const KnotGraph& g) {
    json j;
    j["base_points"] = json::array();
    for (int i = 0; i < g.num_base; ++i) j["base_points"].push_back(g.names[i]);
    j["inner"] = json::array();
    for (int i = 0; i < g.num_inner; ++i) j["inner"].push_back(g.names[g.num_base + i]);
    j["edges"] = json::array();
    for (auto& e : g.edges) j["edges"].push_back({g.names[e.first], g.names[e.second]});
    return j;
}

inline KnotGraph diagram_from_json(const json& j) {
    KnotGraph g;
    for (auto& b : j.at("base_points")) {
        g.names.push_back(b.get<std::string>());
        ++g.num_base;
    }
    for (auto& y : j.at("inner")) {
        g.names.push_back(y.get<std::string>());
        ++g.num_inner;
    }
    for (auto& e : j.at("edges")) {
        if (e.size() != 2) throw std::invalid_argument("edge must have two endpoints");
        g.add_edge(g.index_of(e[0].get<std::string>()), g.index_of(e[1].get<std::string>()));
    }
    g.validate();
    return g;
}

/// Either {"named":"trefoil"} or {"polygon":[[x,y,z],...]}.
inline KnotCurve knot_from_json(const json& j) {
    if (j.contains("named")) return KnotCurve::named(j.at("named").get<std::string>());
    if (j.contains("polygon")) {
        std::vector<Vec3> pts;
        for (auto& p : j.at("polygon")) {
            if (p.size() != 3) throw std::invalid_argument("polygon point must have 3 coordinates");
            pts.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        }
        return KnotCurve::polygon(std::move(pts));
    }
    throw std::invalid_argument("knot json needs \"named\" or \"polygon\"");
}

/// Resolves a knot argument: a known name, else a path to a knot JSON file.
inline KnotCurve resolve_knot(const std::string& spec) {
    try {
        return KnotCurve::named(spec);
    } catch (const std::invalid_argument&) {
    }
    std::ifstream in(spec);
    if (!in) throw std::invalid_argument("cannot open knot file: " + spec);
    json j;
    in >> j;
    return knot_from_json(j);
}

inline KnotGraph load_diagram(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open diagram file: " + path);
    json j;
    in >> j;
    return diagram_from_json(j);
}

/// Weight-system file: JSON map canonical-class-key -> integer.
inline WeightSystem weights_from_json(const json& j, int order) {
    WeightSystem ws;
    ws.order = order;
    for (auto it = j.begin(); it != j.end(); ++it)
        ws.weights[it.key()] = it.value().get<long long>();
    return ws;
}

inline json weights_to_json(const WeightSystem& ws) {
    json j = json::object();
    for (auto& [k, w] : ws.weights) j[k] = w;
    return j;
}

}  // namespace feynknot

#endif
