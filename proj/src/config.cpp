#include "wce/config.hpp"

#include "wce/applications.hpp"
#include "wce/errors.hpp"
#include "wce/ldp.hpp"
#include "wce/parallel.hpp"
#include "wce/report.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace wce {

namespace {

using json = nlohmann::json;

const json& need(const json& j, const char* key) {
    if (!j.contains(key)) throw config_error(std::string("missing config field: ") + key);
    return j.at(key);
}

GridPtr parse_grid(const json& j) {
    GridSpec spec;
    spec.time_cells = need(j, "time_cells").get<Index>();
    spec.t_max = j.value("t_max", 1.0);
    if (j.contains("space")) {
        for (const json& s : j.at("space")) {
            AxisSpec ax;
            ax.cells = need(s, "cells").get<Index>();
            ax.lo = 0.0;
            ax.hi = s.value("extent", 1.0);
            spec.space.push_back(ax);
        }
    }
    if (j.contains("weights")) {
        const auto w = j.at("weights").get<std::vector<double>>();
        spec.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));
    }
    return build_grid(spec);
}

GridFn parse_grid_fn(const json& j, const GridPtr& grid) {
    const std::string kind = need(j, "kind").get<std::string>();
    if (kind == "constant") return constant_fn(grid, need(j, "value").get<double>());
    if (kind == "indicator")
        return indicator_upto(grid, need(j, "upto").get<double>(), j.value("axis", 0));
    if (kind == "values") {
        const auto v = need(j, "values").get<std::vector<double>>();
        return grid_fn(grid,
                       Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
    }
    throw config_error("unknown grid function kind: " + kind);
}

Kernel parse_kernel(const json& j, const GridPtr& grid) {
    const std::string kind = need(j, "kind").get<std::string>();
    if (kind == "constant") return Kernel::constant(need(j, "value").get<double>());
    if (kind == "rank_one_power")
        return Kernel::rank_one_power(parse_grid_fn(need(j, "factor"), grid),
                                      need(j, "order").get<int>(), j.value("coeff", 1.0));
    if (kind == "separable") {
        std::vector<Kernel::SeparableTerm> terms;
        for (const json& t : need(j, "terms")) {
            Kernel::SeparableTerm term;
            term.coeff = t.value("coeff", 1.0);
            for (const json& f : need(t, "factors")) term.factors.push_back(parse_grid_fn(f, grid));
            terms.push_back(std::move(term));
        }
        return Kernel::separable(grid, need(j, "order").get<int>(), std::move(terms));
    }
    if (kind == "dense_csv")
        return load_dense_csv(grid, need(j, "order").get<int>(),
                              need(j, "path").get<std::string>());
    throw config_error("unknown kernel kind: " + kind);
}

SiteSet parse_sites(const json& j) {
    const int dim = j.value("dim", 1);
    const json& pts = need(j, "points");
    Eigen::MatrixXd m(static_cast<Index>(pts.size()), dim);
    Index r = 0;
    for (const json& p : pts) {
        if (dim == 1 && p.is_number()) {
            m(r, 0) = p.get<double>();
        } else {
            if (static_cast<int>(p.size()) != dim)
                throw config_error("site coordinate count does not match dim");
            for (int a = 0; a < dim; ++a) m(r, a) = p.at(static_cast<std::size_t>(a)).get<double>();
        }
        ++r;
    }
    return SiteSet(dim, std::move(m));
}

KernelFamily parse_family(const json& j, const GridPtr& grid) {
    const std::string kind = need(j, "kind").get<std::string>();
    if (kind == "exponential_functional")
        return exponential_functional_kernels(parse_grid_fn(need(j, "h"), grid),
                                              need(j, "n_max").get<int>());
    if (kind == "first_chaos") {
        std::vector<Kernel> orders;
        orders.push_back(Kernel::constant(j.value("f0", 0.0)));
        orders.push_back(Kernel::rank_one_power(parse_grid_fn(need(j, "f1"), grid), 1));
        Eigen::MatrixXd one(1, 1);
        one(0, 0) = 1.0;
        return KernelFamily(SiteSet(1, one), {std::move(orders)});
    }
    if (kind == "second_chaos") {
        std::vector<Kernel> orders;
        orders.push_back(Kernel::constant(j.value("f0", 0.0)));
        orders.push_back(Kernel::separable(grid, 1, {}));
        orders.push_back(Kernel::rank_one_power(parse_grid_fn(need(j, "g"), grid), 2,
                                                j.value("coeff", 1.0)));
        Eigen::MatrixXd one(1, 1);
        one(0, 0) = 1.0;
        return KernelFamily(SiteSet(1, one), {std::move(orders)});
    }
    if (kind == "adapted") {
        std::vector<Kernel> base;
        for (const json& k : need(j, "base")) base.push_back(parse_kernel(k, grid));
        return adapted_kernels(base, parse_sites(need(j, "sites")), grid);
    }
    if (kind == "custom") {
        SiteSet sites = parse_sites(need(j, "sites"));
        std::vector<std::vector<Kernel>> per_site;
        for (const json& list : need(j, "kernels")) {
            std::vector<Kernel> orders;
            for (const json& k : list) orders.push_back(parse_kernel(k, grid));
            per_site.push_back(std::move(orders));
        }
        return KernelFamily(std::move(sites), std::move(per_site));
    }
    throw config_error("unknown family kind: " + kind);
}

json scan_to_json(const LdpReport& report) {
    json rows = json::array();
    for (const ScanRow& r : report.rows) {
        rows.push_back({{"epsilon", r.eps},
                        {"estimate", r.estimate},
                        {"stderr", r.std_err},
                        {"empirical_rate", r.empirical_rate},
                        {"theory_rate", r.theory_rate},
                        {"tilt_norm", r.tilt_norm},
                        {"ess", r.ess}});
    }
    return {{"speed", report.speed == Speed::Eps ? "eps" : "eps2"},
            {"theory_lambda", report.theory_lambda},
            {"rows", rows}};
}

json rate_to_json(const RateResult& r) {
    json out;
    out["infeasible_certified"] = r.infeasible_certified;
    out["converged"] = r.converged;
    out["residual"] = r.residual;
    out["iterations"] = r.iterations;
    if (std::isfinite(r.lambda))
        out["lambda"] = r.lambda;
    else
        out["lambda"] = nullptr;
    return out;
}

} // namespace

int run_config(const std::string& config_path, const CliOverrides& overrides) {
    json cfg;
    GridPtr grid;
    std::optional<ChaosSpec> spec;
    std::uint64_t seed = 0;
    Speed speed = Speed::Eps2;
    std::string out_dir = "out";
    json stages = json::array();
    json results;

    // Build phase: any failure is a configuration error, nothing is written.
    try {
        std::ifstream in(config_path);
        if (!in) throw config_error("cannot open config: " + config_path);
        try {
            cfg = json::parse(in);
        } catch (const json::exception& e) {
            throw config_error(std::string("invalid JSON: ") + e.what());
        }
        if (overrides.seed) cfg["seed"] = *overrides.seed;
        if (overrides.speed) cfg["speed"] = *overrides.speed;
        out_dir = cfg.value("output_dir", out_dir);
        if (overrides.out_dir) out_dir = *overrides.out_dir;
        if (overrides.threads) set_thread_count(*overrides.threads);
        cfg.erase("output_dir");
        cfg.erase("threads");

        seed = cfg.value("seed", 0ull);
        const std::string speed_name = cfg.value("speed", "eps2");
        if (speed_name == "eps")
            speed = Speed::Eps;
        else if (speed_name == "eps2")
            speed = Speed::Eps2;
        else
            throw config_error("speed must be 'eps' or 'eps2'");

        grid = parse_grid(need(cfg, "grid"));
        KernelFamily family = parse_family(need(cfg, "family"), grid);
        const int n_max = cfg.value("n_max", family.max_order());
        spec.emplace(std::move(family), n_max, cfg.value("tail_tolerance", 1e-6));
        stages.push_back({{"name", "build"}, {"status", "ok"}});
    } catch (const std::exception& e) {
        json err = {{"error", e.what()}, {"stage", "build"}};
        std::cerr << err.dump() << "\n";
        return 2;
    }

    // Execution phase: stage failures keep earlier outputs and mark the manifest.
    bool failed = false;
    std::string failure;
    auto run_stage = [&](const char* name, bool enabled, auto&& body) {
        if (failed || !enabled) {
            if (enabled) stages.push_back({{"name", name}, {"status", "skipped"}});
            return;
        }
        try {
            body();
            stages.push_back({{"name", name}, {"status", "ok"}});
        } catch (const std::exception& e) {
            stages.push_back({{"name", name}, {"status", "failed"}, {"error", e.what()}});
            failed = true;
            failure = e.what();
        }
    };

    results["grid"] = {{"cells", grid->cell_count()}, {"total_measure", grid->total_measure()}};

    run_stage("checks", cfg.contains("checks"), [&] {
        const json& c = cfg.at("checks");
        const ExpTypeReport fit = check_exponential_type(spec->family());
        json out = {{"delta_fit", fit.delta_fit}, {"exp_type_pass", fit.pass}};
        json bounds = json::array();
        for (const double kappa : c.value("kappas", std::vector<double>{1.0, 2.0, 4.0})) {
            const double b = series_bound(spec->family(), kappa);
            bounds.push_back({{"kappa", kappa}, {"bound", std::isfinite(b) ? json(b) : json()}});
        }
        out["series_bounds"] = bounds;
        if (c.contains("modulus")) {
            const json& m = c.at("modulus");
            ModulusSpec ms;
            ms.c = need(m, "c").get<double>();
            ms.gamma = need(m, "gamma").get<double>();
            ms.alpha0 = need(m, "alpha0").get<double>();
            const double q = c.value("moment_order", 0.0);
            json profiles = json::array();
            for (const double kappa : c.value("kappas", std::vector<double>{1.0, 2.0, 4.0})) {
                const ModulusProfile p = modulus_profile(spec->family(), kappa, ms, q);
                profiles.push_back({{"kappa", kappa},
                                    {"pass", p.pass},
                                    {"worst_margin", p.worst_margin},
                                    {"fitted_exponent", p.fitted_exponent}});
            }
            out["modulus"] = profiles;
        }
        results["checks"] = out;
    });

    run_stage("rate", cfg.contains("rate_queries"), [&] {
        json out = json::array();
        for (const json& q : cfg.at("rate_queries")) {
            const std::string kind = need(q, "kind").get<std::string>();
            RateResult r;
            if (kind == "pointwise") {
                r = rate_pointwise(*spec, need(q, "site").get<Index>(),
                                   need(q, "r").get<double>());
            } else if (kind == "path") {
                const auto psi = need(q, "psi").get<std::vector<double>>();
                r = rate_path(*spec, Eigen::Map<const Eigen::VectorXd>(
                                         psi.data(), static_cast<Index>(psi.size())));
            } else {
                throw config_error("unknown rate query kind: " + kind);
            }
            json row = rate_to_json(r);
            row["query"] = q;
            out.push_back(std::move(row));
        }
        results["rates"] = out;
    });

    std::optional<LdpReport> scan_report;
    run_stage("scan", cfg.contains("ldp_scan"), [&] {
        const json& s = cfg.at("ldp_scan");
        const json& e = need(s, "event");
        EventSpec event;
        const std::string ekind = need(e, "kind").get<std::string>();
        if (ekind == "site_threshold") {
            event = EventSpec::site_threshold(need(e, "site").get<Index>(),
                                              need(e, "level").get<double>(),
                                              e.value("direction", "ge") == "ge");
        } else if (ekind == "sup_ball") {
            const auto c = need(e, "center").get<std::vector<double>>();
            event = EventSpec::sup_ball(
                Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Index>(c.size())),
                need(e, "radius").get<double>());
        } else {
            throw config_error("unknown event kind: " + ekind);
        }
        std::optional<Control> tilt_override;
        if (s.contains("tilt") && s.at("tilt").is_object())
            tilt_override = Control(parse_grid_fn(s.at("tilt"), grid));
        scan_report = ldp_scan(*spec, event, need(s, "epsilons").get<std::vector<double>>(),
                               speed, need(s, "samples").get<long long>(), seed,
                               tilt_override ? &*tilt_override : nullptr);
        results["scan"] = scan_to_json(*scan_report);
    });

    run_stage("probe", cfg.contains("convergence_probe"), [&] {
        const json& p = cfg.at("convergence_probe");
        const Control u(parse_grid_fn(need(p, "control"), grid));
        const auto rows =
            convergence_probe(*spec, u, need(p, "epsilons").get<std::vector<double>>(),
                              need(p, "samples").get<long long>(), seed);
        json out = json::array();
        for (const ProbeRow& r : rows) out.push_back({{"epsilon", r.eps}, {"rms", r.rms}});
        results["probe"] = out;
    });

    // Emit: CSV for the scan (when it ran), then the summary with the manifest.
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (scan_report) {
        std::ofstream csv(fs::path(out_dir) / "scan.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write to output directory: " + out_dir);
        write_scan_csv(csv, *scan_report);
    }
    json summary = {{"config", cfg}, {"seed", seed}, {"stages", stages}, {"results", results}};
    {
        std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::binary);
        if (!js) throw std::runtime_error("cannot write to output directory: " + out_dir);
        js << summary.dump(2) << "\n";
    }
    if (failed) {
        std::cerr << json({{"error", failure}}).dump() << "\n";
        return 3;
    }
    return 0;
}

} // namespace wce
