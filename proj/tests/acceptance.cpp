// Acceptance gate: one criterion per command-line argument (all when none
// given). Each sub-check prints PASS/FAIL with the computed and reference
// values; the process exits nonzero if any requested criterion fails.
//
// Reference values are the published tabulations for the two canonical
// scenarios; tolerance semantics per check are pinned here on purpose and
// must not be loosened to make a run green.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "eb/experiments.hpp"
#include "eb/io.hpp"

using namespace eb;
namespace fs = std::filesystem;

namespace {

int g_checks = 0;
int g_failed = 0;

void report(bool ok, const std::string& label, const std::string& detail) {
    ++g_checks;
    if (!ok) ++g_failed;
    std::printf("  [%s] %s: %s\n", ok ? "PASS" : "FAIL", label.c_str(), detail.c_str());
}

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// Unit of the last printed digit of a reference value given in printed form.
double last_digit_unit(const char* printed) {
    const char* dot = std::strchr(printed, '.');
    if (!dot) return 1.0;
    return std::pow(10.0, -static_cast<double>(std::strlen(dot + 1)));
}

// |computed - reference| <= one unit in the reference's last printed digit,
// comparing at print resolution.
bool within_last_digit(double computed, const char* printed, int slack_units = 1) {
    double unit = last_digit_unit(printed);
    long long kc = std::llround(computed / unit);
    long long kt = std::llround(std::atof(printed) / unit);
    return std::llabs(kc - kt) <= slack_units;
}

// Spline/truncation-class cells: 10% relative, or one printed digit when the
// print resolution is coarser than 10%.
bool within_pct_or_digit(double computed, const char* printed, double pct) {
    double target = std::atof(printed);
    if (std::abs(computed - target) <= pct * std::abs(target)) return true;
    return within_last_digit(computed, printed);
}

std::string cell(double computed, const char* printed) {
    return "computed " + format_number(computed) + " vs " + printed;
}

bool run_cli(const std::string& args) {
    std::string cmd = std::string(EBCLI_PATH) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- criteria ----

void criterion1() {
    std::printf("criterion 1: spline-free accuracy columns at x=2.5 (rank 12, N=1)\n");
    double t0 = now_s();
    TableReport t = reproduce_table1(12, 5);
    double elapsed = now_s() - t0;

    // row layout: parameter, E, sdf, sdd, sdx, cvf, cvd, cvx
    const char* refs[3][5] = {
        //       E       sdf     sdd     cvf     cvd
        {"2.00", "8.74", "3.38", "4.4", "1.7"},
        {"4.76", "43.4", "13.7", "9.1", "2.9"},
        {"0.03", "43.9", "0.53", "1371", "16"},
    };
    const int cols[5] = {1, 2, 3, 5, 6};  // E, sdf, sdd, cvf, cvd
    const char* names[5] = {"E", "sdf", "sdd", "cvf", "cvd"};
    for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 5; ++c) {
            double v = t.rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(cols[c])];
            report(within_last_digit(v, refs[k][c]),
                   "param " + std::to_string(k + 1) + " " + names[c], cell(v, refs[k][c]));
        }
    report(elapsed < 5.0, "runtime", format_number(elapsed) + " s < 5 s");
}

void criterion2() {
    std::printf("criterion 2: spline-smoothed columns and the rank sweep\n");
    double t0 = now_s();
    TableReport t1 = reproduce_table1(12, 5);
    TableReport t2 = reproduce_table2(5);
    double elapsed = now_s() - t0;

    const char* sdx_ref[3] = {"2.83", "10.4", "1.24"};
    const char* cvx_ref[3] = {"1.4", "2.2", "39"};
    for (int k = 0; k < 3; ++k) {
        double sdx = t1.rows[static_cast<std::size_t>(k)][4];
        double cvx = t1.rows[static_cast<std::size_t>(k)][7];
        report(within_pct_or_digit(sdx, sdx_ref[k], 0.10), "param " + std::to_string(k + 1) + " sdx",
               cell(sdx, sdx_ref[k]));
        report(within_pct_or_digit(cvx, cvx_ref[k], 0.10), "param " + std::to_string(k + 1) + " cvx",
               cell(cvx, cvx_ref[k]));
    }

    // rank sweep rows r = 3,6,...,21; columns r, g_error, E1, cvx1, sdx1, E3, cvx3, sdx3
    const char* gerr_ref[7] = {"0.464", "0.254", "0.110", "0.067", "0.024", "0.012", "0.006"};
    const char* e1_ref[7] = {"1.75", "2.00", "2.00", "2.00", "2.00", "2.00", "2.00"};
    const char* cvx1_ref[7] = {"1.00", "1.34", "1.36", "1.41", "1.39", "1.39", "1.40"};
    const char* sdx1_ref[7] = {"1.75", "2.68", "2.73", "2.83", "2.78", "2.78", "2.80"};
    const char* e3_ref[7] = {"0.021", "0.027", "0.031", "0.032", "0.033", "0.033", "0.033"};
    const char* cvx3_ref[7] = {"3.6", "4.6", "8.2", "38.6", "494.0", "23820.8", "960036.4"};
    const char* sdx3_ref[7] = {"0.1", "0.1", "0.3", "1.2", "16.1", "783.8", "31688.8"};
    for (std::size_t i = 0; i < 7; ++i) {
        const auto& row = t2.rows[i];
        std::string r = "r=" + format_number(row[0]);
        report(within_last_digit(row[1], gerr_ref[i]), r + " g_error", cell(row[1], gerr_ref[i]));
        report(within_last_digit(row[2], e1_ref[i]), r + " E1", cell(row[2], e1_ref[i]));
        report(within_pct_or_digit(row[3], cvx1_ref[i], 0.10), r + " cvx1", cell(row[3], cvx1_ref[i]));
        report(within_pct_or_digit(row[4], sdx1_ref[i], 0.10), r + " sdx1", cell(row[4], sdx1_ref[i]));
        report(within_last_digit(row[5], e3_ref[i]), r + " E3", cell(row[5], e3_ref[i]));
        report(within_pct_or_digit(row[6], cvx3_ref[i], 0.10), r + " cvx3", cell(row[6], cvx3_ref[i]));
        report(within_pct_or_digit(row[7], sdx3_ref[i], 0.10), r + " sdx3", cell(row[7], sdx3_ref[i]));
    }
    report(elapsed < 30.0, "runtime", format_number(elapsed) + " s < 30 s");
}

void criterion3() {
    std::printf("criterion 3: energy rule at 1e-10 selects rank 12\n");
    Scenario sc = scenario_fig1();
    Eigen::JacobiSVD<Mat> svd(sc.P);
    Vec d = svd.singularValues();
    int r = energy_rank(d, 1e-10);
    double total = d.squaredNorm();
    double tail12 = d.tail(d.size() - 12).squaredNorm() / total;
    report(r == 12, "energy rank",
           "computed " + std::to_string(r) + " vs 12 (tail energy past 12 components = " +
               format_number(tail12) + ")");
}

void criterion4() {
    std::printf("criterion 4: posterior-null accuracy table (g-model, N=1)\n");
    double t0 = now_s();
    TableReport t = reproduce_table3(5, 1);
    double elapsed = now_s() - t0;

    const char* e_ref[9] = {"0.04", "0.32", "0.78", "0.94", "0.96", "0.94", "0.78", "0.32", "0.04"};
    const char* sd_ref[9] = {"0.95", "3.28", "9.77", "10.64", "9.70", "10.48", "9.92", "3.36", "0.75"};
    const char* cv_ref[9] = {"24.23", "10.39", "12.53", "11.38", "10.09", "11.20", "12.72", "10.65", "19.21"};
    for (std::size_t i = 0; i < 9; ++i) {
        const auto& row = t.rows[i];
        std::string x = "x=" + format_number(row[0]);
        report(within_last_digit(row[1], e_ref[i], 0), x + " E (exact to print)", cell(row[1], e_ref[i]));
        report(within_pct_or_digit(row[2], sd_ref[i], 0.10), x + " sd", cell(row[2], sd_ref[i]));
        report(within_pct_or_digit(row[3], cv_ref[i], 0.10), x + " cv", cell(row[3], cv_ref[i]));
    }
    report(elapsed < 60.0, "runtime", format_number(elapsed) + " s < 60 s");
}

void criterion5() {
    std::printf("criterion 5: atom recovery over 20 seeds at N=5000\n");
    std::vector<double> atoms, below;
    for (int seed = 1; seed <= 20; ++seed) {
        Figure6Result r = figure6_recovery(static_cast<std::uint64_t>(seed), 5000, 5, 5);
        atoms.push_back(r.atom);
        below.push_back(r.nonnull_below);
    }
    double med_atom = median_of(atoms);
    double med_below = median_of(below);
    double med_above = 1.0 - med_below;
    report(med_atom >= 0.88 && med_atom <= 0.95, "median fitted atom",
           "computed " + format_number(med_atom) + " in [0.88, 0.95]");
    report(med_below >= 0.25 && med_below <= 0.75, "median nonnull mass below 0",
           "computed " + format_number(med_below) + " in [0.25, 0.75]");
    report(med_above >= 0.25 && med_above <= 0.75, "median nonnull mass above 0",
           "computed " + format_number(med_above) + " in [0.25, 0.75]");
}

void criterion6() {
    std::printf("criterion 6: delta-method formulas against simulation\n");

    // shared 10-bin toy model
    Vec theta = linspace(-2.0, 2.0, 5);
    Vec x = linspace(-3.0, 3.0, 10);
    Mat P = build_normal_sampling_matrix(theta, x, 1.0);
    Vec g(5);
    g << 0.1, 0.2, 0.4, 0.2, 0.1;
    Vec f = P * g;
    const long long N0 = 300;
    const int reps = 20000;

    {  // (a) theorem-1 sd vs Monte Carlo
        PseudoInverse pinv = pseudo_inverse(P, 5);
        auto [u, v] = make_uv(P, theta, nearest_index(x, 1.0));
        UVW uvw = uvw_vectors(pinv, u, v, f);
        EstimateWithAccuracy th1 = theorem1_accuracy(uvw, f, static_cast<double>(N0));
        Rng rng(11, "mc");
        double s = 0.0, s2 = 0.0;
        int used = 0;
        for (int r = 0; r < reps; ++r) {
            Vec y = rng.multinomial(N0, f);
            Vec fh = y / static_cast<double>(N0);
            double den = uvw.V.dot(fh);
            if (den == 0.0) continue;
            double e = uvw.U.dot(fh) / den;
            s += e;
            s2 += e * e;
            ++used;
        }
        double mean = s / used;
        double mc = std::sqrt(s2 / used - mean * mean);
        double rel = std::abs(th1.sd - mc) / mc;
        report(rel <= 0.05, "theorem-1 sd vs 20k-draw Monte Carlo",
               "formula " + format_number(th1.sd) + " vs mc " + format_number(mc) + " (rel " +
                   format_number(rel) + " <= 0.05)");
    }

    {  // (b) information matrix vs empirical score covariance
        Mat Q(5, 2);
        for (int j = 0; j < 5; ++j) {
            Q(j, 0) = theta[j];
            Q(j, 1) = theta[j] * theta[j];
        }
        Vec alpha0(2);
        alpha0 << 0.3, -0.2;
        GModelSpec spec{Q, P, theta};
        Vec f0 = P * prior_from_alpha(Q, alpha0);
        Mat info = fisher_information(spec, alpha0, static_cast<double>(N0));
        Rng rng(13, "mc2");
        Mat acc = Mat::Zero(2, 2);
        Vec accm = Vec::Zero(2);
        for (int r = 0; r < reps; ++r) {
            Vec y = rng.multinomial(N0, f0);
            Vec score = log_likelihood_and_score(spec, alpha0, y).second;
            acc += score * score.transpose();
            accm += score;
        }
        acc /= reps;
        accm /= reps;
        Mat cov = acc - accm * accm.transpose();
        double rel = (info - cov).norm() / info.norm();
        report(rel <= 0.02, "information vs empirical score covariance",
               "relative Frobenius gap " + format_number(rel) + " <= 0.02");
    }

    {  // (c) analytic gradient vs finite differences
        Mat Q(5, 2);
        for (int j = 0; j < 5; ++j) {
            Q(j, 0) = theta[j];
            Q(j, 1) = theta[j] * theta[j];
        }
        GModelSpec spec{Q, P, theta};
        Vec alpha(2);
        alpha << 0.3, -0.2;
        Rng rng(17, "y");
        Vec y = rng.multinomial(500, P * prior_from_alpha(Q, alpha));
        auto [ll, score] = log_likelihood_and_score(spec, alpha, y);
        (void)ll;
        double worst = 0.0;
        const double h = 1e-6;
        for (Eigen::Index k = 0; k < 2; ++k) {
            Vec ap = alpha, am = alpha;
            ap[k] += h;
            am[k] -= h;
            double fd = (log_likelihood_and_score(spec, ap, y).first -
                         log_likelihood_and_score(spec, am, y).first) /
                        (2 * h);
            worst = std::max(worst, std::abs(fd - score[k]) / std::max(1.0, std::abs(score[k])));
        }
        report(worst < 1e-5, "gradient vs finite differences",
               "worst relative error " + format_number(worst) + " < 1e-05");
    }

    {  // (d) theorem 3 reduces to theorem 1 at the identity basis
        Scenario sc = scenario_fig1();
        Vec fc = marginal(sc.P, sc.g);
        PseudoInverse pinv = pseudo_inverse(sc.P, 12);
        auto [u, v] = make_uv(sc.P, sc.t1, nearest_index(sc.x, 2.5));
        UVW uvw = uvw_vectors(pinv, u, v, fc);
        EstimateWithAccuracy th1 = theorem1_accuracy(uvw, fc, 1.0);
        EstimateWithAccuracy th3 =
            theorem3_accuracy(th1.estimate, uvw.W, Mat::Identity(193, 193), fc, 1.0);
        double rel = std::abs(th3.cv - th1.cv) / th1.cv;
        report(rel <= 1e-10, "theorem 3 at identity basis equals theorem 1",
               "relative gap " + format_number(rel) + " <= 1e-10");
    }
}

void criterion7() {
    std::printf("criterion 7: conjugate closed-form oracles\n");

    // Robbins on the exact negative-binomial marginal (a=2, b=1)
    std::vector<double> freq;
    for (int xx = 0; xx <= 12; ++xx) freq.push_back((xx + 1) * 0.25 * std::pow(0.5, xx));
    double worst_r = 0.0;
    for (int xx = 0; xx <= 5; ++xx)
        worst_r = std::max(worst_r, std::abs(robbins_estimate(freq, xx) - (2.0 + xx) / 2.0));
    report(worst_r <= 1e-10, "robbins vs (a+x)/(b+1)",
           "worst abs error " + format_number(worst_r) + " <= 1e-10");

    // Tweedie on the exact normal-normal marginal (A=2)
    const double A = 2.0;
    Vec xs = linspace(-4.0, 4.0, 161);
    Vec fh(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        fh[i] = normal_pdf(xs[i] / std::sqrt(A + 1.0)) / std::sqrt(A + 1.0);
    TweedieCurve tc = tweedie_curve(xs, fh);
    double worst_t = 0.0;
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        worst_t = std::max(worst_t, std::abs(tc.estimate[i] - xs[i] * A / (A + 1.0)));
    report(worst_t <= 1e-3, "tweedie vs x*A/(A+1)",
           "worst abs error " + format_number(worst_t) + " <= 0.001");
}

void criterion8() {
    std::printf("criterion 8: fdr pipeline structural checks on the synthetic stand-in\n");
    // pinned typical draw: seed 2 (see the unit suite for the same run)
    Scenario sc = scenario_fig4();
    std::vector<double> z = simulate_zvalues(sc, 6033, 2);
    FdrReport rep = fdr_pipeline(z, 5, 0.0, 5, 2);

    int i0 = nearest_index(rep.x, 0.0);
    report(rep.ufdr.value[i0] > 1.0, "ufdr(0) > 1 before rescaling",
           "computed " + format_number(rep.ufdr.value[i0]));

    double fmin = rep.fdr_g.value.minCoeff();
    double fmax = rep.fdr_g.value.maxCoeff();
    report(fmin >= 0.0 && fmax <= 1.0, "fdr curve within [0,1]",
           "range [" + format_number(fmin) + ", " + format_number(fmax) + "]");

    for (int xv = -3; xv <= 3; ++xv) {
        int i = nearest_index(rep.x, static_cast<double>(xv));
        double sdf = rep.ufdr.sd[i];
        double sdg = rep.fdr_g.sd[i];
        report(sdf < sdg, "sdf < sdg at x=" + std::to_string(xv),
               "sdf " + format_number(sdf) + " vs sdg " + format_number(sdg));
    }
}

void criterion9() {
    std::printf("criterion 9: byte-identical reruns through the command-line tool\n");
    fs::path base = fs::temp_directory_path() / "eb_acceptance9";
    fs::remove_all(base);

    struct Job {
        std::string args;
        std::vector<std::string> files;
    };
    std::vector<Job> jobs = {
        {"tables 1", {"table1.csv", "manifest.json"}},
        {"tables 3 --seed 5", {"table3.csv", "manifest.json"}},
        {"tables 4 --seed 2", {"table4.csv", "fdr_curve.csv", "manifest.json"}},
        {"simulate --scenario fig4 --n 500 --seed 9", {"z.csv", "manifest.json"}},
    };
    int jid = 0;
    for (const auto& job : jobs) {
        fs::path a = base / ("run" + std::to_string(jid) + "a");
        fs::path b = base / ("run" + std::to_string(jid) + "b");
        ++jid;
        bool ok_a = run_cli(job.args + " --out " + a.string());
        bool ok_b = run_cli(job.args + " --out " + b.string());
        if (!ok_a || !ok_b) {
            report(false, job.args, "command failed");
            continue;
        }
        for (const auto& fn : job.files) {
            std::string ca = read_text_file(a / fn);
            std::string cb = read_text_file(b / fn);
            report(ca == cb, job.args + " -> " + fn,
                   ca == cb ? "identical (" + std::to_string(ca.size()) + " bytes)"
                            : "sha1 " + sha1_hex(ca).substr(0, 12) + " vs " + sha1_hex(cb).substr(0, 12));
        }
    }
    fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};

    int exit_code = 0;
    for (int n : wanted) {
        g_checks = 0;
        g_failed = 0;
        double t0 = now_s();
        switch (n) {
            case 1: criterion1(); break;
            case 2: criterion2(); break;
            case 3: criterion3(); break;
            case 4: criterion4(); break;
            case 5: criterion5(); break;
            case 6: criterion6(); break;
            case 7: criterion7(); break;
            case 8: criterion8(); break;
            case 9: criterion9(); break;
            default:
                std::fprintf(stderr, "unknown criterion %d\n", n);
                return 2;
        }
        std::printf("criterion %d: %d/%d checks passed (%.2f s)%s\n\n", n, g_checks - g_failed,
                    g_checks, now_s() - t0, g_failed ? " -- FAILED" : "");
        if (g_failed) exit_code = 1;
    }
    return exit_code;
}
