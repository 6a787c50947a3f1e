#ifndef SPECFIT_RNG_HPP_
#define SPECFIT_RNG_HPP_

#include <cstdint>
#include <limits>
#include <random>

namespace specfit {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic random source for one chain. The mt19937_64 engine output
// is pinned by the standard; every distribution on top of it is hand-rolled
// here so that draws do not depend on the standard library's distribution
// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_pos() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal (Box-Muller, no cached spare).
    double normal();

    // Exponential with unit rate.
    double exponential();

    // Gamma(shape, rate) by Marsaglia-Tsang.
    double gamma(double shape, double rate);

    // Normal(mean, sd^2) conditioned on [lo, hi]; either bound may be
    // infinite. Normal rejection in the bulk, Robert's exponential proposal
    // in a far tail, uniform rejection on narrow intervals.
    double trunc_normal(double mean, double sd, double lo, double hi);

private:
    double trunc_std_lower(double lo);                // X >= lo
    double trunc_std_interval(double lo, double hi);  // both bounds finite

    std::mt19937_64 engine_;
};

// Survival function of the standard normal, and its log, stable far into
// the upper tail.
double norm_sf(double x);
double log_norm_sf(double x);

// log pdf of Normal(mean, sd^2) truncated to [lo, hi], evaluated at x
// (-inf outside the interval). Includes the normalization term.
double trunc_normal_logpdf(double x, double mean, double sd, double lo, double hi);

// Mean of Normal(mean, sd^2) truncated to [lo, inf).
double trunc_normal_mean(double mean, double sd, double lo);

}  // namespace specfit

#endif  // SPECFIT_RNG_HPP_
