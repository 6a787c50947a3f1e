#include "specfit/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace specfit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
constexpr int kMaxRejectionAttempts = 1 << 20;
}  // namespace

double Rng::normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::exponential() { return -std::log(uniform_pos()); }

double Rng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be > 0");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back.
        double g = gamma(shape + 1.0, 1.0);
        double u = uniform_pos();
        return g * std::pow(u, 1.0 / shape) / rate;
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
    }
}

// Robert (1995): exponential proposal for N(0,1) given X >= lo with lo in the
// upper tail; plain rejection otherwise.
double Rng::trunc_std_lower(double lo) {
    if (lo <= 0.45) {
        for (int i = 0; i < kMaxRejectionAttempts; ++i) {
            double z = normal();
            if (z >= lo) return z;
        }
        throw std::runtime_error("trunc_normal: rejection did not converge");
    }
    double alpha = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
    for (int i = 0; i < kMaxRejectionAttempts; ++i) {
        double z = lo + exponential() / alpha;
        double t = z - alpha;
        if (std::log(uniform_pos()) <= -0.5 * t * t) return z;
    }
    throw std::runtime_error("trunc_normal: tail rejection did not converge");
}

double Rng::trunc_std_interval(double lo, double hi) {
    if (lo < 0.45 && hi > -0.45 && hi - lo > 1.0) {
        // Wide central interval: plain rejection.
        for (int i = 0; i < kMaxRejectionAttempts; ++i) {
            double z = normal();
            if (z >= lo && z <= hi) return z;
        }
        throw std::runtime_error("trunc_normal: rejection did not converge");
    }
    if (lo > 0.45 && hi - lo > 1.0) {
        // Wide upper-tail interval: one-sided tail draw, reject above hi.
        for (int i = 0; i < kMaxRejectionAttempts; ++i) {
            double z = trunc_std_lower(lo);
            if (z <= hi) return z;
        }
        throw std::runtime_error("trunc_normal: tail interval rejection did not converge");
    }
    if (hi < -0.45 && hi - lo > 1.0) {
        for (int i = 0; i < kMaxRejectionAttempts; ++i) {
            double z = -trunc_std_lower(-hi);
            if (z >= lo) return z;
        }
        throw std::runtime_error("trunc_normal: tail interval rejection did not converge");
    }
    // Narrow interval: uniform proposal with the exact density bound.
    double c = (lo > 0.0) ? lo : (hi < 0.0 ? hi : 0.0);  // argmax of the density
    for (int i = 0; i < kMaxRejectionAttempts; ++i) {
        double z = lo + (hi - lo) * uniform();
        if (std::log(uniform_pos()) <= 0.5 * (c * c - z * z)) return z;
    }
    throw std::runtime_error("trunc_normal: interval rejection did not converge");
}

double Rng::trunc_normal(double mean, double sd, double lo, double hi) {
    if (!(sd > 0.0)) throw std::invalid_argument("trunc_normal: sd must be > 0");
    if (!(lo <= hi)) throw std::invalid_argument("trunc_normal: empty interval");
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    if (b - a < 1e-14) return 0.5 * (lo + hi);
    double z;
    if (b >= kInf) {
        z = trunc_std_lower(a);
    } else if (a <= -kInf) {
        z = -trunc_std_lower(-b);
    } else {
        z = trunc_std_interval(a, b);
    }
    double x = mean + sd * z;
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    return x;
}

double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double log_norm_sf(double x) {
    // erfc stays accurate until it underflows near x ~ 37.5; past the switch
    // the truncated asymptotic series has relative error ~ 945/x^10 < 1e-12.
    if (x < 35.0) return std::log(0.5 * std::erfc(x / kSqrt2));
    double inv2 = 1.0 / (x * x);
    double series = 1.0 + inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * 105.0)));
    return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double trunc_normal_logpdf(double x, double mean, double sd, double lo, double hi) {
    if (x < lo || x > hi) return -kInf;
    double z = (x - mean) / sd;
    double log_num = -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    double log_mass;
    if (b >= kInf) {
        log_mass = log_norm_sf(a);
    } else if (a <= -kInf) {
        log_mass = log_norm_sf(-b);
    } else {
        // P(a <= Z <= b) computed from the farther tail for stability.
        double m = (a > -b) ? norm_sf(a) - norm_sf(b) : norm_sf(-b) - norm_sf(-a);
        if (m <= 0.0) return -kInf;
        log_mass = std::log(m);
    }
    return log_num - log_mass;
}

double trunc_normal_mean(double mean, double sd, double lo) {
    double a = (lo - mean) / sd;
    // mean + sd * phi(a)/SF(a), with the hazard evaluated stably.
    double log_phi = -0.5 * a * a - kLogSqrt2Pi;
    double hazard = std::exp(log_phi - log_norm_sf(a));
    return mean + sd * hazard;
}

}  // namespace specfit
