// Command-line driver: diagram enumeration, configuration-space integrals,
// anomaly integrals, the bundle property suites, and the order-2 invariant.
//
// Exit codes: 0 success, 1 property violation, 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "feynknot/bundle.hpp"
#include "feynknot/diagram.hpp"
#include "feynknot/integrator.hpp"
#include "feynknot/invariants.hpp"
#include "feynknot/json_io.hpp"
#include "feynknot/strata.hpp"

namespace fk = feynknot;

namespace {

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot open output file: " + path);
    return file;
}

std::string format_estimate_row(const std::string& label, const fk::IntegralEstimate& est) {
    std::ostringstream os;
    os.precision(12);
    os << label << "\t" << est.value << "\t" << est.stderr_value << "\t" << est.samples << "\t"
       << est.seed;
    return os.str();
}

int cmd_enumerate(int order, const std::string& out_path) {
    auto diagrams = fk::enumerate_diagrams(order, 3 * order);
    fk::json arr = fk::json::array();
    for (auto& g : diagrams) {
        fk::json j = fk::diagram_to_json(g);
        j["key"] = fk::canonical_key(g);
        j["order"] = fk::order(g);
        j["automorphisms"] = fk::automorphisms(g).size();
        arr.push_back(std::move(j));
    }
    std::ofstream file;
    open_output(file, out_path) << arr.dump(2) << "\n";
    return 0;
}

int cmd_integrate(const std::string& diagram_path, const std::string& knot_spec,
                  long long samples, std::uint64_t seed, int threads,
                  const std::string& out_path) {
    fk::KnotGraph g = fk::load_diagram(diagram_path);
    fk::KnotCurve curve = fk::resolve_knot(knot_spec);
    if (!fk::check_dimension(g)) {
        std::cerr << "error: diagram fails the top-form dimension condition\n";
        return 2;
    }
    auto est = fk::integrate_diagram(g, fk::EdgeOrdering::identity(g), curve, samples, seed, threads);
    std::ofstream file;
    auto& out = open_output(file, out_path);
    out << "diagram\tvalue\tstderr\tsamples\tseed\n";
    out << format_estimate_row(fk::canonical_key(g), est) << "\n";
    return 0;
}

int cmd_anomaly(int order, long long samples, std::uint64_t seed, int threads,
                double tolerance, const std::string& out_path) {
    auto diagrams = fk::enumerate_diagrams(order, 3 * order);
    std::ofstream file;
    auto& out = open_output(file, out_path);
    out << "diagram\tvalue\tstderr\tsamples\tseed\n";
    bool violation = false;
    int index = 0;
    for (auto& g : diagrams) {
        ++index;
        if (g.num_base == 0 || !fk::check_dimension(g) || !fk::is_connected_through_base(g))
            continue;
        auto est = fk::integrate_anomaly(g, fk::EdgeOrdering::identity(g), samples,
                                         seed + 1000ull * static_cast<std::uint64_t>(index), threads);
        out << format_estimate_row(fk::canonical_key(g), est) << "\n";
        if (std::fabs(est.value) > std::max(tolerance, 3.0 * est.stderr_value)) violation = true;
    }
    return violation ? 1 : 0;
}

void report_property(fk::json& props, const std::string& name, bool pass, double worst,
                     double tolerance) {
    fk::json p;
    p["property"] = name;
    p["status"] = pass ? "pass" : "fail";
    p["worst_case"] = worst;
    p["tolerance"] = tolerance;
    props.push_back(std::move(p));
}

int cmd_bundle_check(std::optional<int> order, const std::string& diagram_path, long long trials,
                     std::uint64_t seed, double tolerance, bool inject_fake_generator,
                     const std::string& out_path) {
    std::vector<fk::KnotGraph> diagrams;
    if (!diagram_path.empty()) {
        diagrams.push_back(fk::load_diagram(diagram_path));
    } else {
        int n = order.value_or(2);
        for (int i = 1; i <= n; ++i) {
            fk::EnumerateOptions opt;
            opt.include_splittable = true;
            for (auto& g : fk::enumerate_diagrams(i, 3 * i, opt)) diagrams.push_back(g);
        }
    }
    std::vector<fk::KnotGraph> usable;
    for (auto& g : diagrams)
        if (g.num_base > 0 && g.num_inner > 0 && fk::inner_vertices_reach_base(g))
            usable.push_back(g);

    fk::json props = fk::json::array();
    fk::Rng rng(seed);
    bool all_pass = true;

    // trivialization: sigma_min > 0 and column norms <= sqrt(k)
    {
        double worst_sigma = std::numeric_limits<double>::infinity();
        double worst_excess = 0.0;
        bool pass = true;
        for (auto& g : usable) {
            for (int rep = 0; rep < 50; ++rep) {
                auto h = fk::random_height(g, rng);
                auto gb = fk::ground_basis(g, h);
                double sigma = fk::check_injective(gb);
                worst_sigma = std::min(worst_sigma, sigma);
                if (sigma <= 0.0) pass = false;
                double bound = std::sqrt(static_cast<double>(g.num_edges()));
                for (int c = 0; c < gb.theta.cols(); ++c) {
                    double n2 = 0.0;
                    for (int r = 0; r < gb.theta.rows(); ++r) n2 += std::norm(gb.theta(r, c));
                    double excess = std::sqrt(n2) - bound;
                    worst_excess = std::max(worst_excess, excess);
                    if (excess > 1e-9) pass = false;
                }
            }
        }
        report_property(props, "trivialization_injective", pass, worst_sigma, 0.0);
        report_property(props, "column_norm_bound", worst_excess <= 1e-9, worst_excess, 1e-9);
        all_pass = all_pass && pass && worst_excess <= 1e-9;
    }

    // isotopy: det(G) > 0 along every adjacent-transposition blend
    {
        double worst = std::numeric_limits<double>::infinity();
        bool pass = true;
        for (auto& g : usable) {
            if (g.num_inner < 2) continue;
            for (int rep = 0; rep < 20; ++rep) {
                auto h = fk::random_height(g, rng);
                for (int r = 1; r <= g.num_inner - 1; ++r) {
                    auto chk = fk::isotopy_check(g, h, r);
                    for (double d : chk.determinant) {
                        worst = std::min(worst, d);
                        if (d <= 0.0) pass = false;
                    }
                }
            }
        }
        if (!std::isfinite(worst)) worst = 1.0;
        report_property(props, "isotopy_determinant_positive", pass, worst, 0.0);
        all_pass = all_pass && pass;
    }

    // transitions and the structure group
    {
        auto report = fk::structure_group(usable, trials, seed + 17);
        if (inject_fake_generator) {
            report.violations.push_back("injected test generator is not a signed permutation");
        }
        bool pass = report.ok();
        report_property(props, "structure_group_signed_permutations", pass,
                        static_cast<double>(report.violations.size()), 0.0);
        fk::json groups = fk::json::array();
        for (auto& ps : report.groups) {
            fk::json gj;
            gj["basis_size"] = ps.basis_size;
            gj["group_order"] = ps.group_order;
            gj["hyperoctahedral_order"] = ps.ambient_order;
            gj["divides"] = ps.divides;
            fk::json gens = fk::json::array();
            for (auto& sp : ps.generators) gens.push_back(sp);
            gj["generators"] = std::move(gens);
            groups.push_back(std::move(gj));
        }
        fk::json cert;
        cert["properties"] = std::move(props);
        cert["structure_groups"] = std::move(groups);
        cert["violations"] = report.violations;
        cert["strata_sampled"] = report.strata_sampled;
        cert["tolerance"] = tolerance;
        all_pass = all_pass && pass;
        cert["status"] = all_pass ? "pass" : "fail";
        std::ofstream file;
        open_output(file, out_path) << cert.dump(2) << "\n";
    }
    return all_pass ? 0 : 1;
}

int cmd_invariant(const std::string& knot_spec, long long samples, std::uint64_t seed,
                  int threads, const std::string& weights_path, const std::string& out_path) {
    fk::KnotCurve curve = fk::resolve_knot(knot_spec);
    if (!weights_path.empty()) {
        std::ifstream in(weights_path);
        if (!in) throw std::invalid_argument("cannot open weight file: " + weights_path);
        fk::json j;
        in >> j;
        auto ws = fk::weights_from_json(j, 2);
        auto comps = fk::z_components(2, curve, samples, seed, threads);
        auto est = fk::weighted_sum(ws, comps);
        std::ofstream file;
        auto& out = open_output(file, out_path);
        out << "quantity\tvalue\tstderr\tsamples\tseed\n";
        out << format_estimate_row("weighted_sum", est) << "\n";
        return 0;
    }
    auto v2 = fk::normalized_v2(curve, samples, seed, threads);
    std::ofstream file;
    auto& out = open_output(file, out_path);
    out << "quantity\tvalue\tstderr\tsamples\tseed\n";
    out.precision(12);
    out << "normalized_v2\t" << v2.value << "\t" << v2.stderr_value << "\t" << samples << "\t"
        << seed << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knot-diagram configuration-space integral toolkit"};
    app.require_subcommand(1);

    long long samples = 100000;
    std::uint64_t seed = 1;
    int threads = fk::default_thread_count();
    int order = 2;
    double tolerance = 0.05;
    std::string knot = "trefoil";
    std::string diagram_path;
    std::string out_path;
    std::string weights_path;
    bool inject_fake = false;

    auto add_common = [&](CLI::App* cmd, bool with_samples) {
        if (with_samples) {
            cmd->add_option("--samples", samples, "Monte Carlo sample count");
            cmd->add_option("--seed", seed, "random seed");
            cmd->add_option("--threads", threads, "worker threads (FEYNKNOT_THREADS fallback)");
        }
        cmd->add_option("--out", out_path, "output file (default: stdout)");
    };

    auto* enumerate = app.add_subcommand("enumerate", "list diagram classes of a given order");
    enumerate->add_option("--order", order, "diagram order")->required();
    add_common(enumerate, false);

    auto* integrate = app.add_subcommand("integrate", "configuration-space integral of one diagram");
    integrate->add_option("--diagram", diagram_path, "diagram JSON file")->required();
    integrate->add_option("--knot", knot, "knot name or JSON file");
    add_common(integrate, true);

    auto* anomaly = app.add_subcommand("anomaly", "collapsed-space integrals for all classes of an order");
    anomaly->add_option("--order", order, "diagram order");
    anomaly->add_option("--tolerance", tolerance, "absolute bound checked per class");
    add_common(anomaly, true);

    auto* bundle = app.add_subcommand("bundle-check", "trivialization, isotopy and structure-group suites");
    bundle->add_option("--order", order, "diagram orders up to this value");
    bundle->add_option("--diagram", diagram_path, "single diagram JSON file");
    bundle->add_option("--trials", samples, "stratum samples");
    bundle->add_option("--seed", seed, "random seed");
    bundle->add_option("--tolerance", tolerance, "numeric tolerance recorded in the certificate");
    bundle->add_flag("--inject-fake-generator", inject_fake,
                     "debug: force a violation to exercise the failure path");
    add_common(bundle, false);

    auto* invariant = app.add_subcommand("invariant", "normalized order-2 invariant of a knot");
    invariant->add_option("--knot", knot, "knot name or JSON file");
    invariant->add_option("--weights", weights_path, "weight-system JSON file (reports the raw sum)");
    add_common(invariant, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(enumerate)) return cmd_enumerate(order, out_path);
        if (app.got_subcommand(integrate))
            return cmd_integrate(diagram_path, knot, samples, seed, threads, out_path);
        if (app.got_subcommand(anomaly))
            return cmd_anomaly(order, samples, seed, threads, tolerance, out_path);
        if (app.got_subcommand(bundle))
            return cmd_bundle_check(order, diagram_path, samples, seed, tolerance, inject_fake,
                                    out_path);
        if (app.got_subcommand(invariant))
            return cmd_invariant(knot, samples, seed, threads, weights_path, out_path);
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 2;
}
