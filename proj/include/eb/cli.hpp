#pragma once

// Command-line surface. Subcommands map onto the library pipelines; every
// run writes CSV outputs plus a manifest.json with content hashes so any
// artifact is reproducible from its provenance line. Exit codes: 0 ok,
// 2 config error, 3 data error, 4 numerical failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eb/experiments.hpp"

namespace eb {

namespace detail {

inline std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("EB_OUT_DIR")) return env;
    return "eb_out";
}

inline Scenario scenario_by_name(const std::string& name) {
    if (name == "fig1") return scenario_fig1();
    if (name == "fig4") return scenario_fig4();
    throw ConfigError("unknown scenario: " + name);
}

inline std::string fit_f_csv(const Scenario& sc, const CountVector& counts, const PoissonFit& pf,
                             const PseudoInverse& pinv) {
    CsvTable t;
    t.columns = {"x", "count", "fhat", "posterior_mean", "sd"};
    Mat X = natural_spline_basis(sc.x, 5, true).X;
    for (Eigen::Index i = 0; i < sc.x.size(); ++i) {
        auto [u, v] = make_uv(sc.P, sc.t1, static_cast<int>(i));
        UVW uvw = uvw_vectors(pinv, u, v, pf.fhat);
        double Ei = estimate_E_hat(uvw, pf.fhat);
        EstimateWithAccuracy acc = theorem3_accuracy(Ei, uvw.W, X, pf.fhat, counts.N);
        t.add_row({sc.x[i], counts.y[i], pf.fhat[i], Ei, acc.sd});
    }
    return t.to_string();
}

inline std::string gfit_curve_csv(const Scenario& sc, const GModelSpec& spec, const GModelFit& fit) {
    CsvTable t;
    t.columns = {"x", "posterior_mean", "sd"};
    for (Eigen::Index i = 0; i < sc.x.size(); ++i) {
        EstimateWithAccuracy acc = theorem4_accuracy(spec, fit.g, fit.gcov, sc.t1, static_cast<int>(i));
        t.add_row({sc.x[i], acc.estimate, acc.sd});
    }
    return t.to_string();
}

inline ordered_json gfit_json(const GModelFit& fit, const Vec& theta, double spike_at) {
    ordered_json j;
    j["alpha"] = std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.alpha.size());
    j["pi0_at_spike"] = fit.g[nearest_index(theta, spike_at)];
    j["loglik"] = fit.loglik;
    j["score_norm"] = fit.score_norm;
    j["converged"] = fit.converged;
    j["restarts_used"] = fit.restarts_used;
    return j;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"empirical Bayes estimation toolkit"};
    app.require_subcommand(1);

    std::string input, scenario_name = "fig1";
    std::string out_dir = detail::default_out_dir().string();
    int df = 5;
    int rank = 0;  // 0: use energy rule
    double energy_eps = 1e-10;
    double spike = 0.0;
    int boot = 0;
    long long n_obs = 6033;
    int restarts = 5;
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out_dir, "output directory (default $EB_OUT_DIR or ./eb_out)");
        sub->add_option("--seed", seed, "master seed for all random streams");
    };

    auto* tables = app.add_subcommand("tables", "regenerate an accuracy table");
    int table_id = 0;
    tables->add_option("id", table_id, "table number (1-4)")->required()->check(CLI::Range(1, 4));
    tables->add_option("--input", input, "z-value file (table 4; synthetic stand-in when omitted)");
    tables->add_option("--df", df, "spline degrees of freedom");
    tables->add_option("--rank", rank, "explicit truncation rank (default: table convention)");
    add_common(tables);

    auto* fit_f = app.add_subcommand("fit-f", "x-space pipeline: smooth counts, invert, posterior curve");
    fit_f->add_option("--input", input, "z-value file")->required();
    fit_f->add_option("--df", df, "spline degrees of freedom");
    fit_f->add_option("--rank", rank, "explicit truncation rank (default: energy rule)");
    fit_f->add_option("--energy-eps", energy_eps, "energy threshold for rank selection");
    add_common(fit_f);

    auto* fit_g = app.add_subcommand("fit-g", "theta-space pipeline: exponential-family prior MLE");
    fit_g->add_option("--input", input, "z-value file")->required();
    fit_g->add_option("--df", df, "spline degrees of freedom");
    fit_g->add_option("--spike", spike, "atom location appended to the basis");
    fit_g->add_option("--restarts", restarts, "optimizer starts");
    add_common(fit_g);

    auto* tweedie = app.add_subcommand("tweedie", "posterior means from the smoothed marginal");
    tweedie->add_option("--input", input, "z-value file")->required();
    tweedie->add_option("--df", df, "spline degrees of freedom");
    tweedie->add_option("--boot", boot, "bootstrap replications for sd band (0 = none)");
    add_common(tweedie);

    auto* fdr = app.add_subcommand("fdr", "false discovery rate curves from both pipelines");
    fdr->add_option("--input", input, "z-value file")->required();
    fdr->add_option("--df", df, "spline degrees of freedom");
    fdr->add_option("--spike", spike, "atom location for the prior fit");
    fdr->add_option("--restarts", restarts, "optimizer starts");
    add_common(fdr);

    auto* js = app.add_subcommand("james-stein", "shrink observations toward their grand mean");
    js->add_option("--input", input, "value file")->required();
    add_common(js);

    auto* robbins = app.add_subcommand("robbins", "count-ratio posterior means on integer support");
    robbins->add_option("--input", input, "frequency file: count of x=0,1,2,... per line")->required();
    add_common(robbins);

    auto* simulate = app.add_subcommand("simulate", "draw z-values from a scenario");
    simulate->add_option("--scenario", scenario_name, "fig1 or fig4");
    simulate->add_option("--n", n_obs, "number of observations");
    add_common(simulate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << ordered_json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        if (tables->parsed()) {
            RunWriter run(out_dir, "tables " + std::to_string(table_id));
            run.setting("seed", seed);
            run.setting("df", df);
            if (table_id == 1) {
                TableReport rep = reproduce_table1(rank > 0 ? rank : 12, df);
                run.setting("rank", rank > 0 ? rank : 12);
                run.setting("report_meta", rep.meta);
                run.write("table1.csv", rep.to_csv());
            } else if (table_id == 2) {
                TableReport rep = reproduce_table2(df);
                run.setting("report_meta", rep.meta);
                run.write("table2.csv", rep.to_csv());
            } else if (table_id == 3) {
                TableReport rep = reproduce_table3(df, seed);
                run.setting("report_meta", rep.meta);
                run.write("table3.csv", rep.to_csv());
            } else {
                std::vector<double> z;
                if (!input.empty()) {
                    z = read_zvalues(input);
                    run.setting("input", input);
                } else {
                    z = simulate_zvalues(scenario_fig4(), n_obs, seed);
                    run.setting("input", "synthetic fig4 stand-in");
                }
                FdrReport rep = fdr_pipeline(z, df, spike, restarts, seed);
                CsvTable t;
                t.columns = {"x", "ufdr", "sd_f", "fdr", "sd_g"};
                for (int xv = -4; xv <= 4; ++xv) {
                    int i = nearest_index(rep.x, static_cast<double>(xv));
                    t.add_row({rep.x[i], rep.ufdr.value[i], rep.ufdr.sd[i], rep.fdr_g.value[i], rep.fdr_g.sd[i]});
                }
                run.setting("pi0_f", rep.pi0_f);
                run.setting("pi0_g", rep.pi0_g);
                run.write("table4.csv", t.to_string());
                CsvTable full;
                full.columns = t.columns;
                for (Eigen::Index i = 0; i < rep.x.size(); ++i)
                    full.add_row({rep.x[i], rep.ufdr.value[i], rep.ufdr.sd[i], rep.fdr_g.value[i], rep.fdr_g.sd[i]});
                run.write("fdr_curve.csv", full.to_string());
            }
            run.finish();
        } else if (fit_f->parsed()) {
            std::vector<double> z = read_zvalues(input);
            Scenario sc = scenario_fig1();
            int outside = 0;
            CountVector counts = bin_observations(z, sc.x, &outside);
            Mat X = natural_spline_basis(sc.x, df, true).X;
            PoissonFit pf = fit_poisson_glm(counts.y, X);
            PseudoInverse pinv =
                rank > 0 ? pseudo_inverse(sc.P, rank) : pseudo_inverse_energy(sc.P, energy_eps);
            RunWriter run(out_dir, "fit-f");
            run.setting("input", input);
            run.setting("df", df);
            run.setting("rank", pinv.rank);
            run.setting("energy_eps", energy_eps);
            run.setting("out_of_range", outside);
            run.setting("seed", seed);
            run.input_hash("input", read_text_file(input));
            run.write("fit_f.csv", detail::fit_f_csv(sc, counts, pf, pinv));
            ordered_json j;
            j["alpha"] = std::vector<double>(pf.alpha.data(), pf.alpha.data() + pf.alpha.size());
            j["deviance"] = pf.deviance;
            j["iterations"] = pf.iterations;
            j["rank"] = pinv.rank;
            run.write("fit_f.json", j.dump(2) + "\n");
            run.finish();
        } else if (fit_g->parsed()) {
            std::vector<double> z = read_zvalues(input);
            Scenario sc = scenario_fig1();
            int outside = 0;
            CountVector counts = bin_observations(z, sc.x, &outside);
            Mat Q = augment_with_spike(natural_spline_basis(sc.theta, df, false).X, sc.theta, spike);
            GModelSpec spec{Q, sc.P, sc.theta};
            GModelFit fit = fit_mle(spec, counts.y, restarts, seed);
            RunWriter run(out_dir, "fit-g");
            run.setting("input", input);
            run.setting("df", df);
            run.setting("spike", spike);
            run.setting("restarts", restarts);
            run.setting("seed", seed);
            run.setting("out_of_range", outside);
            run.input_hash("input", read_text_file(input));
            CsvTable gt;
            gt.columns = {"theta", "g"};
            for (Eigen::Index j = 0; j < sc.theta.size(); ++j) gt.add_row({sc.theta[j], fit.g[j]});
            run.write("ghat.csv", gt.to_string());
            run.write("curve.csv", detail::gfit_curve_csv(sc, spec, fit));
            run.write("fit_g.json", detail::gfit_json(fit, sc.theta, spike).dump(2) + "\n");
            run.finish();
            if (!fit.converged) return 4;
        } else if (tweedie->parsed()) {
            std::vector<double> z = read_zvalues(input);
            Scenario sc = scenario_fig1();
            CountVector counts = bin_observations(z, sc.x);
            Mat X = natural_spline_basis(sc.x, df, true).X;
            PoissonFit pf = fit_poisson_glm(counts.y, X);
            TweedieCurve curve = tweedie_curve(sc.x, pf.fhat);
            Vec boot_sd;
            if (boot > 0) {
                boot_sd = bootstrap_sd(
                    z,
                    [&](const std::vector<double>& sample) {
                        CountVector c = bin_observations(sample, sc.x);
                        PoissonFit p = fit_poisson_glm(c.y, X);
                        return tweedie_curve(sc.x, p.fhat).estimate;
                    },
                    boot, seed);
            }
            RunWriter run(out_dir, "tweedie");
            run.setting("input", input);
            run.setting("df", df);
            run.setting("boot", boot);
            run.setting("seed", seed);
            run.input_hash("input", read_text_file(input));
            CsvTable t;
            t.columns = boot > 0 ? std::vector<std::string>{"x", "estimate", "sd_boot"}
                                 : std::vector<std::string>{"x", "estimate"};
            for (Eigen::Index i = 0; i < sc.x.size(); ++i) {
                if (boot > 0)
                    t.add_row({sc.x[i], curve.estimate[i], boot_sd[i]});
                else
                    t.add_row({sc.x[i], curve.estimate[i]});
            }
            run.write("tweedie.csv", t.to_string());
            run.finish();
        } else if (fdr->parsed()) {
            std::vector<double> z = read_zvalues(input);
            FdrReport rep = fdr_pipeline(z, df, spike, restarts, seed);
            RunWriter run(out_dir, "fdr");
            run.setting("input", input);
            run.setting("df", df);
            run.setting("spike", spike);
            run.setting("restarts", restarts);
            run.setting("seed", seed);
            run.input_hash("input", read_text_file(input));
            CsvTable t;
            t.columns = {"x", "ufdr", "sd_f", "fdr", "sd_g"};
            for (Eigen::Index i = 0; i < rep.x.size(); ++i)
                t.add_row({rep.x[i], rep.ufdr.value[i], rep.ufdr.sd[i], rep.fdr_g.value[i], rep.fdr_g.sd[i]});
            run.write("fdr.csv", t.to_string());
            ordered_json j;
            j["pi0_f"] = rep.pi0_f;
            j["pi0_g"] = rep.pi0_g;
            j["g_converged"] = rep.g_converged;
            j["out_of_range"] = rep.out_of_range;
            run.write("fdr.json", j.dump(2) + "\n");
            run.finish();
            if (!rep.g_converged) return 4;
        } else if (js->parsed()) {
            std::vector<double> z = read_zvalues(input);
            Vec X = Eigen::Map<Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
            Vec est = james_stein(X);
            RunWriter run(out_dir, "james-stein");
            run.setting("input", input);
            run.setting("seed", seed);
            run.input_hash("input", read_text_file(input));
            CsvTable t;
            t.columns = {"z", "estimate"};
            for (Eigen::Index i = 0; i < X.size(); ++i) t.add_row({X[i], est[i]});
            run.write("james_stein.csv", t.to_string());
            run.finish();
        } else if (robbins->parsed()) {
            std::vector<double> freq = read_zvalues(input);
            for (double v : freq)
                if (v < 0) throw DataError("robbins: negative frequency");
            RunWriter run(out_dir, "robbins");
            run.setting("input", input);
            run.setting("seed", seed);
            run.input_hash("input", read_text_file(input));
            CsvTable t;
            t.columns = {"x", "estimate"};
            for (int x = 0; x + 1 < static_cast<int>(freq.size()); ++x) {
                if (freq[static_cast<std::size_t>(x)] <= 0) continue;
                t.add_row({static_cast<double>(x), robbins_estimate(freq, x)});
            }
            run.write("robbins.csv", t.to_string());
            run.finish();
        } else if (simulate->parsed()) {
            Scenario sc = detail::scenario_by_name(scenario_name);
            std::vector<double> z = simulate_zvalues(sc, n_obs, seed);
            RunWriter run(out_dir, "simulate");
            run.setting("scenario", scenario_name);
            run.setting("n", n_obs);
            run.setting("seed", seed);
            std::string text;
            for (double v : z) text += format_number(v) + "\n";
            run.write("z.csv", text);
            run.finish();
        }
    } catch (const ConfigError& e) {
        std::cerr << ordered_json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << ordered_json{{"error", "data"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << ordered_json{{"error", "numerical"}, {"message", e.what()}}.dump() << "\n";
        return 4;
    }
    return 0;
}

}  // namespace eb
