// Compares the serial reference kernels against their OpenMP counterparts:
// design-matrix construction and a small batch of independent chains.

#include <chrono>
#include <cstdio>
#include <omp.h>
#include <string>
#include <vector>

#include "specfit/render.hpp"
#include "specfit/sampler.hpp"
#include "specfit/synth.hpp"

using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
    int repeats = 5;
    if (argc > 1) repeats = std::max(1, std::atoi(argv[1]));

    using namespace specfit;

    TemplateCatalog cat = suite_catalog("crowded");
    std::vector<SynthSpec> specs = standard_suite("crowded");
    Spectrum spec = generate(specs[0]).first;

    std::size_t u = 0;
    for (const auto& met : cat.metabolites) u += met.multiplets.size();
    std::vector<double> sigma(u, 0.0), gamma(cat.metabolites.size(), 0.0015);

    std::printf("design matrix: %zu points x %zu multiplets, %d repeats\n",
                (std::size_t)spec.size(), u, repeats);
    double t_serial = 1e300, t_parallel = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = Clock::now();
        auto T1 = build_design_matrix_serial(cat, sigma, gamma, spec.ppm);
        t_serial = std::min(t_serial, seconds_since(t0));
        t0 = Clock::now();
        auto T2 = build_design_matrix(cat, sigma, gamma, spec.ppm);
        t_parallel = std::min(t_parallel, seconds_since(t0));
        double diff = (T1 - T2).cwiseAbs().maxCoeff();
        if (diff != 0.0) {
            std::printf("MISMATCH: serial and parallel design matrices differ by %g\n", diff);
            return 1;
        }
    }
    std::printf("  serial   %.4f s\n  parallel %.4f s (%d threads)\n  speedup  %.2fx\n",
                t_serial, t_parallel, omp_get_max_threads(), t_serial / t_parallel);

    // Batch of short chains: single worker vs. all hardware threads.
    std::vector<Spectrum> batch;
    for (int k = 0; k < 4; ++k) {
        Spectrum s = spec;
        s.id = "bench_" + std::to_string(k);
        batch.push_back(std::move(s));
    }
    Hyperparameters hp;
    SamplerConfig cfg;
    cfg.burnin_iters = 100;
    cfg.sample_iters = 50;
    cfg.seed = 1234;

    std::printf("batch: %zu chains, %d+%d sweeps each\n", batch.size(), cfg.burnin_iters,
                cfg.sample_iters);
    auto t0 = Clock::now();
    run_batch(batch, cat, hp, cfg, 1);
    double t1w = seconds_since(t0);
    int hw = omp_get_max_threads();
    t0 = Clock::now();
    run_batch(batch, cat, hp, cfg, hw);
    double tNw = seconds_since(t0);
    std::printf("  1 worker   %.3f s\n  %d workers %.3f s\n  speedup    %.2fx\n", t1w, hw, tNw,
                t1w / tNw);
    return 0;
}
