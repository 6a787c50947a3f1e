#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <vector>

#include "specfit/errors.hpp"
#include "specfit/io.hpp"
#include "specfit/model.hpp"
#include "specfit/render.hpp"
#include "specfit/rng.hpp"
#include "specfit/sampler.hpp"
#include "specfit/summary.hpp"

using namespace specfit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("specfit_summary_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Multiplet singlet(const char* id, double center, double protons, double gamma_hint = 0.0) {
    (void)gamma_hint;
    Multiplet mu;
    mu.id = id;
    mu.center_ppm = center;
    mu.proton_count = protons;
    mu.peaks = {{0.0, protons}};
    return mu;
}

// Minimal hand-built chain: kept x 1 beta draws plus consistent plumbing.
ChainResult chain_from_beta(const std::vector<double>& draws) {
    ChainResult c;
    c.spectrum_id = "hand";
    c.metabolite_names = {"x"};
    int n = static_cast<int>(draws.size());
    c.beta.resize(n, 1);
    c.v = Eigen::MatrixXd::Zero(n, 1);
    c.sigma.resize(n, 0);
    c.mu = Eigen::VectorXd::Zero(n);
    c.lambda = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) c.beta(i, 0) = draws[i];
    return c;
}

}  // namespace

TEST_CASE("quantiles interpolate order statistics linearly") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    CHECK(quantile(x, 0.5) == 2.5);
    CHECK(quantile(x, 0.0) == 1.0);
    CHECK(quantile(x, 1.0) == 4.0);
    CHECK(quantile(x, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(quantile(x, 0.025) == doctest::Approx(1.075).epsilon(1e-12));
    std::vector<double> one = {7.0};
    CHECK(quantile(one, 0.3) == 7.0);
    std::vector<double> none;
    CHECK_THROWS_AS(quantile(none, 0.5), DomainError);
}

TEST_CASE("summary statistics on known samples") {
    std::vector<double> x = {5.0, 1.0, 3.0, 2.0, 4.0};  // unsorted on purpose
    QuantileStats st = compute_stats(x);
    CHECK(st.mean == 3.0);
    CHECK(st.sd == doctest::Approx(std::sqrt(2.5)).epsilon(1e-14));
    CHECK(st.median == 3.0);
    CHECK(st.q25 == 2.0);
    CHECK(st.q75 == 4.0);
    CHECK(st.q025 == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(st.q975 == doctest::Approx(4.9).epsilon(1e-12));
    // Quantiles are monotone.
    CHECK(st.q025 <= st.q25);
    CHECK(st.q25 <= st.median);
    CHECK(st.median <= st.q75);
    CHECK(st.q75 <= st.q975);

    std::vector<double> constant(10, 2.5);
    QuantileStats cs = compute_stats(constant);
    CHECK(cs.sd == 0.0);
    CHECK(cs.q025 == 2.5);
    CHECK(cs.q975 == 2.5);
    CHECK(cs.mean == 2.5);
}

TEST_CASE("summarize: medians, truncated-normal oracle, permutation invariance") {
    ChainResult c = chain_from_beta({1.0, 2.0, 3.0, 4.0});
    PosteriorSummary s = summarize(c);
    CHECK(s.beta[0].median == 2.5);
    CHECK(s.metabolites == std::vector<std::string>{"x"});
    CHECK(s.gamma[0].mean == doctest::Approx(1.0).epsilon(1e-15));  // exp(0+0)

    ChainResult empty = chain_from_beta({});
    CHECK_THROWS_AS(summarize(empty), DomainError);

    // 1e5 draws from a known truncated normal: mean within 3 SE.
    Rng rng(314);
    const int N = 100000;
    std::vector<double> draws(N);
    for (int i = 0; i < N; ++i) draws[i] = rng.trunc_normal(1.0, 2.0, 0.0, kInf);
    PosteriorSummary big = summarize(chain_from_beta(draws));
    double oracle = trunc_normal_mean(1.0, 2.0, 0.0);
    CHECK(std::abs(big.beta[0].mean - oracle) < 3.0 * 2.0 / std::sqrt((double)N));

    // Permutation invariance: reversing the draw order changes nothing.
    std::vector<double> rev(draws.rbegin(), draws.rend());
    PosteriorSummary back = summarize(chain_from_beta(rev));
    CHECK(back.beta[0].mean == doctest::Approx(big.beta[0].mean).epsilon(1e-12));
    CHECK(back.beta[0].median == big.beta[0].median);
    CHECK(back.beta[0].q025 == big.beta[0].q025);
}

TEST_CASE("kernel density estimate: normal oracle, normalization, guards") {
    Rng rng(2718);
    const int N = 20000;
    std::vector<double> draws(N);
    for (int i = 0; i < N; ++i) draws[i] = rng.normal();

    std::vector<double> grid;
    for (double g = -6.0; g <= 6.0 + 1e-12; g += 0.01) grid.push_back(g);
    std::vector<double> dens = density_estimate(draws, grid);

    std::size_t at0 = 600;  // grid[600] == 0
    CHECK(grid[at0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dens[at0] == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(0.05));

    double integral = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        integral += 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

    std::vector<double> single = {1.0};
    CHECK_THROWS_AS(density_estimate(single, grid), DomainError);
    std::vector<double> degenerate = {0.0, 0.0};
    CHECK_THROWS_AS(density_estimate(degenerate, grid), DomainError);

    // Hand oracle for the Silverman bandwidth on a small sample.
    std::vector<double> small = {0.0, 1.0, 2.0, 3.0};
    double sd = std::sqrt(5.0 / 3.0);
    double iqr = 2.25 - 0.75;
    double bw = 0.9 * std::min(sd, iqr / 1.34) * std::pow(4.0, -0.2);
    std::vector<double> pts = {0.4, 1.7};
    std::vector<double> got = density_estimate(small, pts);
    for (std::size_t g = 0; g < pts.size(); ++g) {
        double acc = 0.0;
        for (double v : small) {
            double z = (pts[g] - v) / bw;
            acc += std::exp(-0.5 * z * z);
        }
        double want = acc / (4.0 * bw * std::sqrt(2.0 * M_PI));
        CHECK(got[g] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("local maxima counting is plateau-aware") {
    CHECK(count_local_maxima(std::vector<double>{0, 1, 0}) == 1);
    CHECK(count_local_maxima(std::vector<double>{0, 1, 1, 0}) == 1);
    CHECK(count_local_maxima(std::vector<double>{0, 1, 0, 2, 0}) == 2);
    CHECK(count_local_maxima(std::vector<double>{1, 3, 2, 5, 4}) == 2);
    CHECK(count_local_maxima(std::vector<double>{1, 2, 3}) == 1);  // edge maximum
    CHECK(count_local_maxima(std::vector<double>{2, 2, 2}) == 0);  // whole-array plateau
    CHECK(count_local_maxima(std::vector<double>{}) == 0);
}

TEST_CASE("prominent maxima: persistence filters shallow wiggles") {
    // Peaks of heights 5 and 3 with a saddle at 1 between them, plus a
    // 0.1-deep wiggle on the tall peak's shoulder. Prominences: 5 (global),
    // 2 (second peak), 0.1 (wiggle).
    std::vector<double> v = {0, 2, 5, 4.0, 3.9, 4.0, 1, 3, 0};
    CHECK(count_local_maxima(v) == 3);
    CHECK(count_prominent_maxima(v, 0.05) == 3);
    CHECK(count_prominent_maxima(v, 0.5) == 2);
    CHECK(count_prominent_maxima(v, 2.5) == 1);
    CHECK(count_prominent_maxima(v, 6.0) == 0);

    // Equal twin peaks both clear the bar; a flat array has no mode.
    CHECK(count_prominent_maxima(std::vector<double>{0, 3, 0, 3, 0}, 1.0) == 2);
    CHECK(count_prominent_maxima(std::vector<double>{2, 2, 2}, 0.1) == 0);
    CHECK(count_prominent_maxima(std::vector<double>{}, 0.1) == 0);

    // Monotone ramp: one edge mode, prominence = total rise.
    CHECK(count_prominent_maxima(std::vector<double>{0, 1, 2, 3}, 2.9) == 1);
    CHECK(count_prominent_maxima(std::vector<double>{0, 1, 2, 3}, 3.1) == 0);

    // KDE of a unimodal posterior: tail wiggles stay below a 5%-of-peak
    // prominence floor, so exactly one mode survives.
    Rng rng(99);
    std::vector<double> draws(5000);
    for (auto& d : draws) d = 2.0 + 0.3 * rng.normal();
    std::vector<double> grid;
    for (double g = 0.0; g <= 4.0; g += 0.01) grid.push_back(g);
    std::vector<double> dens = density_estimate(draws, grid);
    double peak = *std::max_element(dens.begin(), dens.end());
    CHECK(count_prominent_maxima(dens, 0.05 * peak) == 1);

    // A well-separated mixture keeps both modes at the same floor.
    for (std::size_t i = 0; i < draws.size(); ++i)
        draws[i] = (i % 2 ? 1.2 : 2.8) + 0.15 * rng.normal();
    dens = density_estimate(draws, grid);
    peak = *std::max_element(dens.begin(), dens.end());
    CHECK(count_prominent_maxima(dens, 0.05 * peak) == 2);
}

TEST_CASE("integration baseline: isolated accuracy, overlap bias, guards") {
    // Isolated singlet, narrow enough that +-0.02 ppm holds 98.4% of the mass.
    TemplateCatalog cat;
    cat.metabolites.push_back({"iso", {singlet("s", 3.15, 2.0)}});
    Spectrum spec;
    spec.id = "iso";
    for (int i = 0; i <= 1200; ++i) spec.ppm.push_back(3.0 + 0.00025 * i);
    double beta = 1.7, gamma = 0.0005;
    std::vector<double> t = render_multiplet(cat.metabolites[0].multiplets[0], 0.0, gamma,
                                             spec.ppm);
    spec.intensity.resize(spec.ppm.size());
    for (std::size_t i = 0; i < spec.ppm.size(); ++i) spec.intensity[i] = beta * t[i];

    std::vector<double> est = integrate_baseline(spec, cat);
    REQUIRE(est.size() == 1);
    CHECK(est[0] == doctest::Approx(beta).epsilon(0.02));

    // Overlapping neighbor: positive cross-contamination biases both up.
    TemplateCatalog two = cat;
    two.metabolites.push_back({"next", {singlet("s", 3.175, 2.0)}});
    std::vector<double> t2 = render_multiplet(two.metabolites[1].multiplets[0], 0.0, 0.002,
                                              spec.ppm);
    Spectrum both = spec;
    for (std::size_t i = 0; i < both.ppm.size(); ++i) both.intensity[i] += 0.9 * t2[i];
    std::vector<double> est_both = integrate_baseline(both, two);
    Spectrum only_second = spec;
    for (std::size_t i = 0; i < only_second.ppm.size(); ++i)
        only_second.intensity[i] = 0.9 * t2[i];
    std::vector<double> est_second = integrate_baseline(only_second, two);
    CHECK(est_both[0] > est[0]);             // first window picks up the neighbor
    CHECK(est_both[1] > est_second[1]);      // and vice versa

    // Zero spectrum integrates to zero everywhere.
    Spectrum zero = spec;
    std::fill(zero.intensity.begin(), zero.intensity.end(), 0.0);
    std::vector<double> zs = integrate_baseline(zero, two);
    CHECK(zs == std::vector<double>{0.0, 0.0});

    // Off-axis metabolite window.
    TemplateCatalog off = cat;
    off.metabolites.push_back({"far", {singlet("s", 9.0, 1.0)}});
    CHECK_THROWS_AS(integrate_baseline(spec, off), EmptyWindowError);
}

TEST_CASE("error comparison: exactness, scale invariance, guards") {
    std::vector<double> truth = {1.0, 2.0, 3.0};
    ErrorStats exact = compare_errors(truth, truth);
    CHECK(exact.scale == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(exact.rmse == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(exact.mean_rel_err == doctest::Approx(0.0).epsilon(1e-15));

    std::vector<double> doubled = {2.0, 4.0, 6.0};
    ErrorStats aligned = compare_errors(doubled, truth);
    CHECK(aligned.scale == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(aligned.rmse < 1e-15);

    // Rescaling the estimates by any positive constant changes nothing.
    std::vector<double> est = {0.9, 2.3, 2.8};
    ErrorStats a = compare_errors(est, truth);
    std::vector<double> est7 = {0.9 * 7, 2.3 * 7, 2.8 * 7};
    ErrorStats b = compare_errors(est7, truth);
    CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-12));
    CHECK(a.mean_rel_err == doctest::Approx(b.mean_rel_err).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) CHECK(a.abs_err[i] == doctest::Approx(b.abs_err[i]).epsilon(1e-12));

    // Zero truth entries are excluded from the relative mean.
    std::vector<double> tz = {0.0, 2.0};
    std::vector<double> ez = {0.1, 2.0};
    ErrorStats z = compare_errors(ez, tz);
    CHECK(std::isnan(z.rel_err[0]));
    CHECK(!std::isnan(z.rel_err[1]));

    std::vector<double> shorter = {1.0};
    CHECK_THROWS_AS(compare_errors(shorter, truth), DomainError);
    std::vector<double> none;
    CHECK_THROWS_AS(compare_errors(none, none), DomainError);
}

TEST_CASE("reconstruct_fit: single recorded draw reproduces the state exactly") {
    TemplateCatalog cat;
    cat.metabolites.push_back({"met", {singlet("s", 3.3, 2.0)}});
    Spectrum spec;
    spec.id = "one";
    for (int i = 0; i < 181; ++i) spec.ppm.push_back(2.85 + 0.005 * i);
    spec.intensity.assign(181, 0.1);

    Hyperparameters hp = resolve_hyperparameters(Hyperparameters{}, spec, cat);
    FitContext ctx = make_fit_context(spec, cat, hp);

    ChainResult c;
    c.spectrum_id = spec.id;
    c.metabolite_names = {"met"};
    c.multiplet_labels = {"met:s"};
    c.multiplet_centers = {3.3};
    c.ppm = spec.ppm;
    c.observed = spec.intensity;
    c.beta = Eigen::MatrixXd::Constant(1, 1, 1.25);
    c.sigma = Eigen::MatrixXd::Constant(1, 1, 0.004);
    c.v = Eigen::MatrixXd::Constant(1, 1, -0.1);
    c.mu = Eigen::VectorXd::Constant(1, std::log(0.002));
    c.lambda = Eigen::VectorXd::Constant(1, 30.0);
    c.theta = Eigen::MatrixXd::Zero(1, ctx.n_coeff());
    Rng rng(5);
    for (int i = 0; i < ctx.n_coeff(); ++i) c.theta(0, i) = 0.01 * std::fabs(rng.normal());

    FitDecomposition fd = reconstruct_fit(c, spec, cat);
    std::vector<double> tc =
        render_multiplet(cat.metabolites[0].multiplets[0], 0.004,
                         std::exp(std::log(0.002) - 0.1), spec.ppm);
    std::vector<double> th(ctx.n_coeff());
    for (int i = 0; i < ctx.n_coeff(); ++i) th[i] = c.theta(0, i);
    std::vector<double> yu = ctx.plan.inverse(th);
    for (int i = 0; i < 181; ++i) {
        CHECK(fd.catalogued[i] == doctest::Approx(1.25 * tc[i]).epsilon(1e-12));
        CHECK(fd.wavelet[i] == doctest::Approx(yu[i]).epsilon(1e-12));
        CHECK(fd.total[i] == fd.catalogued[i] + fd.wavelet[i]);
        CHECK(fd.residual[i] == fd.observed[i] - fd.total[i]);
    }

    // Means absent and theta unrecorded: nothing to reconstruct from.
    ChainResult bare = c;
    bare.theta.resize(0, 0);
    CHECK_THROWS_AS(reconstruct_fit(bare, spec, cat), ConfigError);

    // Mismatched axis.
    Spectrum other = spec;
    other.ppm[0] -= 1.0;
    CHECK_THROWS_AS(reconstruct_fit(c, other, cat), AxisError);

    // Recorded running means take precedence and are passed through.
    ChainResult meaned = c;
    meaned.mean_catalogued.assign(181, 2.0);
    meaned.mean_wavelet.assign(181, -0.5);
    FitDecomposition fm = reconstruct_fit(meaned, spec, cat);
    CHECK(fm.catalogued[7] == 2.0);
    CHECK(fm.wavelet[7] == -0.5);
    CHECK(fm.total[7] == 1.5);
}

TEST_CASE("reconstruct_fit on sampled chains: complete vs uncatalogued synthetics") {
    TemplateCatalog cat;
    cat.metabolites.push_back({"met", {singlet("s", 3.3, 2.0)}});
    Spectrum clean;
    clean.id = "clean";
    for (int i = 0; i < 181; ++i) clean.ppm.push_back(2.85 + 0.005 * i);
    std::vector<double> t =
        render_multiplet(cat.metabolites[0].multiplets[0], 0.0, 0.0015, clean.ppm);
    clean.intensity.resize(181);
    for (int i = 0; i < 181; ++i) clean.intensity[i] = 2.0 * t[i];

    SamplerConfig cfg;
    cfg.burnin_iters = 600;
    cfg.sample_iters = 300;
    cfg.seed = 51;
    ChainResult cc = run_chain(clean, cat, Hyperparameters{}, cfg);
    FitDecomposition fd = reconstruct_fit(cc, clean, cat);
    double nc = 0.0, nu = 0.0;
    for (int i = 0; i < 181; ++i) {
        nc += fd.catalogued[i] * fd.catalogued[i];
        nu += fd.wavelet[i] * fd.wavelet[i];
    }
    CHECK(std::sqrt(nu) <= 0.01 * std::sqrt(nc));

    // Add an uncatalogued singlet: it must surface in the wavelet component.
    Spectrum bumped = clean;
    Multiplet extra = singlet("x", 3.45, 1.0);
    std::vector<double> te = render_multiplet(extra, 0.0, 0.002, bumped.ppm);
    for (int i = 0; i < 181; ++i) bumped.intensity[i] += 1.2 * te[i];

    ChainResult cb = run_chain(bumped, cat, Hyperparameters{}, cfg);
    FitDecomposition fb = reconstruct_fit(cb, bumped, cat);
    int peak = 0;
    for (int i = 1; i < 181; ++i)
        if (fb.wavelet[i] > fb.wavelet[peak]) peak = i;
    CHECK(std::abs(bumped.ppm[peak] - 3.45) <= 0.01);
    // The catalogued component does not chase the extra peak.
    double extra_height = 1.2 * te[120];  // 3.45 sits at index 120
    CHECK(std::abs(fb.catalogued[peak]) < 0.2 * extra_height);
    // And the amplitude estimate stays close to the catalogued truth.
    PosteriorSummary ps = summarize(cb);
    CHECK(ps.beta[0].mean == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("fit outputs: files written atomically with parsable content") {
    TemplateCatalog cat;
    cat.metabolites.push_back({"met", {singlet("s", 3.3, 2.0)}});
    Spectrum spec;
    spec.id = "out";
    for (int i = 0; i < 121; ++i) spec.ppm.push_back(3.0 + 0.005 * i);
    std::vector<double> t =
        render_multiplet(cat.metabolites[0].multiplets[0], 0.0, 0.0015, spec.ppm);
    Rng gen(12);
    spec.intensity.resize(121);
    for (int i = 0; i < 121; ++i) spec.intensity[i] = 1.4 * t[i] + 0.1 * gen.normal();

    SamplerConfig cfg;
    cfg.burnin_iters = 80;
    cfg.sample_iters = 40;
    cfg.seed = 13;
    cfg.record_theta = true;
    ChainResult chain = run_chain(spec, cat, Hyperparameters{}, cfg);

    TempDir tmp;
    fs::path dir = tmp.path / "fit_out";
    write_fit_outputs(dir, chain, spec, cat);

    for (const char* name : {"summary.csv", "sigma_summary.csv", "fit.csv", "beta_samples.csv",
                             "sigma_samples.csv", "diagnostics.csv", "theta_samples.csv"})
        CHECK(fs::exists(dir / name));
    for (const auto& e : fs::directory_iterator(dir))
        CHECK(e.path().extension() != ".tmp");

    // summary.csv round-trips the posterior mean in full precision.
    PosteriorSummary s = summarize(chain);
    std::ifstream in(dir / "summary.csv");
    std::string header, row;
    std::getline(in, header);
    CHECK(header.rfind("metabolite,beta_mean,", 0) == 0);
    std::getline(in, row);
    CHECK(row.rfind("met,", 0) == 0);
    double parsed = std::strtod(row.c_str() + 4, nullptr);
    CHECK(parsed == s.beta[0].mean);

    // beta_samples.csv: header plus one line per kept draw.
    std::ifstream bs(dir / "beta_samples.csv");
    int lines = 0;
    std::string l;
    while (std::getline(bs, l)) ++lines;
    CHECK(lines == chain.kept() + 1);

    // fit.csv reparses as numeric columns of the right length.
    std::ifstream fin(dir / "fit.csv");
    std::getline(fin, l);
    CHECK(l == "ppm,observed,total,catalogued,wavelet,residual");
    int rows = 0;
    while (std::getline(fin, l)) ++rows;
    CHECK(rows == 121);

    // Without recorded theta the optional file is absent.
    SamplerConfig plain = cfg;
    plain.record_theta = false;
    ChainResult chain2 = run_chain(spec, cat, Hyperparameters{}, plain);
    fs::path dir2 = tmp.path / "fit_out2";
    write_fit_outputs(dir2, chain2, spec, cat);
    CHECK(!fs::exists(dir2 / "theta_samples.csv"));
    CHECK(fs::exists(dir2 / "summary.csv"));
}
