#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "specfit/errors.hpp"
#include "specfit/rng.hpp"
#include "specfit/wavelet.hpp"

using namespace specfit;

namespace {

std::vector<double> random_signal(int n, int seed) {
    Rng rng(seed);
    std::vector<double> y(n);
    for (double& v : y) v = rng.normal();
    return y;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double norm2(const std::vector<double>& v) {
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

// Naive single analysis stage written directly from the periodized
// convolution definition.
void naive_stage(const std::vector<double>& x, const std::vector<double>& lo,
                 const std::vector<double>& hi, std::vector<double>& a, std::vector<double>& d) {
    int m = static_cast<int>(x.size());
    int half = m / 2;
    a.assign(half, 0.0);
    d.assign(half, 0.0);
    for (int k = 0; k < half; ++k) {
        for (int t = 0; t < static_cast<int>(lo.size()); ++t) {
            int j = (2 * k + t) % m;
            a[k] += lo[t] * x[j];
            d[k] += hi[t] * x[j];
        }
    }
}

std::vector<double> naive_forward_padded(const WaveletPlan& p, std::vector<double> x) {
    std::vector<double> theta(p.n_padded());
    std::vector<double> a, d;
    for (int l = 1; l <= p.levels(); ++l) {
        naive_stage(x, p.lowpass(), p.highpass(), a, d);
        std::copy(d.begin(), d.end(), theta.begin() + p.bands()[l - 1].offset);
        x = a;
    }
    std::copy(x.begin(), x.end(), theta.begin() + p.bands().back().offset);
    return theta;
}

}  // namespace

TEST_CASE("filter taps satisfy the defining equations") {
    WaveletPlan p = WaveletPlan::make(64);
    const auto& lo = p.lowpass();
    const auto& hi = p.highpass();
    REQUIRE(lo.size() == 12);

    double sum = std::accumulate(lo.begin(), lo.end(), 0.0);
    CHECK(std::abs(sum - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(norm2(std::vector<double>(lo)) - 1.0) < 1e-14);
    CHECK(std::abs(std::accumulate(hi.begin(), hi.end(), 0.0)) < 1e-12);

    for (int k = 1; k <= 5; ++k) {
        double corr_ll = 0.0, corr_lh = 0.0;
        for (int t = 0; t + 2 * k < 12; ++t) {
            corr_ll += lo[t] * lo[t + 2 * k];
            corr_lh += lo[t] * hi[t + 2 * k];
        }
        CHECK(std::abs(corr_ll) < 1e-15);
        CHECK(std::abs(corr_lh) < 1e-15);
    }
    double corr0 = 0.0;
    for (int t = 0; t < 12; ++t) corr0 += lo[t] * hi[t];
    CHECK(std::abs(corr0) < 1e-15);

    // Six vanishing moments of the highpass.
    for (int pw = 0; pw <= 5; ++pw) {
        double m = 0.0;
        for (int t = 0; t < 12; ++t) m += std::pow(static_cast<double>(t), pw) * hi[t];
        CHECK(std::abs(m) < 1e-11 * std::pow(11.0, pw));
    }
}

TEST_CASE("plan geometry and default depth") {
    WaveletPlan p181 = WaveletPlan::make(181);
    CHECK(p181.n_signal() == 181);
    CHECK(p181.n_padded() == 256);
    CHECK(p181.levels() == 5);

    WaveletPlan p256 = WaveletPlan::make(256);
    CHECK(p256.n_padded() == 256);
    CHECK(p256.levels() == 5);

    WaveletPlan p4096 = WaveletPlan::make(4096);
    CHECK(p4096.n_padded() == 4096);
    CHECK(p4096.levels() == 9);

    // Bands: level-1 details first, approximation last; counts halve.
    const auto& b = p256.bands();
    REQUIRE(b.size() == 6);
    int offset = 0;
    for (int l = 0; l < 5; ++l) {
        CHECK(b[l].level == l + 1);
        CHECK(!b[l].approx);
        CHECK(b[l].count == 256 >> (l + 1));
        CHECK(b[l].offset == offset);
        CHECK(b[l].step == 1 << (l + 1));
        offset += b[l].count;
    }
    CHECK(b[5].approx);
    CHECK(b[5].count == 8);
    CHECK(b[5].offset == offset);

    // Support lengths: 12, then 2*len + 10 per extra stage.
    CHECK(b[0].support_len == 12);
    CHECK(b[1].support_len == 34);
    CHECK(b[2].support_len == 78);

    CHECK(WaveletPlan::make(16).levels() == 1);  // k=4 -> max(1, 1)
    CHECK_THROWS_AS(WaveletPlan::make(1), DomainError);
    CHECK_THROWS_AS(WaveletPlan::make(64, 20), DomainError);
}

TEST_CASE("perfect reconstruction through reflection padding") {
    for (int n : {181, 256, 300, 4096}) {
        auto y = random_signal(n, 1000 + n);
        WaveletPlan p = WaveletPlan::make(n);
        auto back = p.inverse(p.forward(y));
        CHECK_MESSAGE(max_abs_diff(y, back) <= 1e-12 * max_abs(y), "n = ", n);
    }
    // Shallow and deep plans alike.
    for (int levels : {1, 2, 8}) {
        auto y = random_signal(256, levels);
        WaveletPlan p = WaveletPlan::make(256, levels);
        CHECK(max_abs_diff(y, p.inverse(p.forward(y))) <= 1e-12 * max_abs(y));
    }
}

TEST_CASE("reflection padding is half-sample symmetric") {
    int n = 181;
    auto y = random_signal(n, 7);
    WaveletPlan p = WaveletPlan::make(n);
    std::vector<double> padded(p.n_padded());
    for (int j = 0; j < p.n_padded(); ++j) {
        int q = j % (2 * n);
        padded[j] = y[q < n ? q : 2 * n - 1 - q];
    }
    CHECK(max_abs_diff(p.forward(y), p.forward_padded(padded)) == 0.0);
}

TEST_CASE("transform is orthonormal on the padded domain") {
    auto x = random_signal(256, 11);
    WaveletPlan p = WaveletPlan::make(256);
    auto theta = p.forward_padded(x);
    CHECK(std::abs(norm2(theta) - norm2(x)) <= 1e-12 * norm2(x));

    // Round trip in both directions.
    CHECK(max_abs_diff(p.inverse_padded(theta), x) <= 1e-13 * max_abs(x));
    auto t2 = random_signal(256, 12);
    CHECK(max_abs_diff(p.forward_padded(p.inverse_padded(t2)), t2) <= 1e-13 * max_abs(t2));

    // Full Gram matrix of the synthesis columns at n = 64.
    WaveletPlan q = WaveletPlan::make(64);
    std::vector<std::vector<double>> cols;
    for (int i = 0; i < 64; ++i) cols.push_back(q.column(i));
    for (int i = 0; i < 64; ++i)
        for (int j = i; j < 64; ++j) {
            double g = std::inner_product(cols[i].begin(), cols[i].end(), cols[j].begin(), 0.0);
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-12);
        }
}

TEST_CASE("forward matches the naive periodized convolution cascade") {
    for (int n : {64, 256}) {
        WaveletPlan p = WaveletPlan::make(n);
        auto x = random_signal(p.n_padded(), 100 + n);
        auto ref = naive_forward_padded(p, x);
        CHECK(max_abs_diff(p.forward_padded(x), ref) <= 1e-13);
    }
}

TEST_CASE("polynomial signals annihilate interior detail coefficients") {
    int n = 64;
    WaveletPlan p = WaveletPlan::make(n, 1);
    for (int pw = 0; pw <= 5; ++pw) {
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j) x[j] = std::pow(static_cast<double>(j), pw);
        auto theta = p.forward_padded(x);
        const auto& b = p.bands()[0];
        for (int k = 0; k < b.count; ++k) {
            if (2 * k + 11 >= n) continue;  // wrapped rows see the jump
            CHECK(std::abs(theta[b.offset + k]) < 1e-9 * std::pow(static_cast<double>(n), pw));
        }
    }
}

TEST_CASE("columns are shifted prototypes with exact support") {
    WaveletPlan p = WaveletPlan::make(181);
    int N = p.n_padded();
    for (int i : {0, 1, 100, 127, 128, 190, 240, 248, 255}) {
        auto col = p.column(i);
        auto [start, len] = p.support(i);
        const auto& b = p.bands()[p.band_of(i)];
        // Zero outside the (circular) support.
        for (int j = 0; j < N; ++j) {
            int rel = ((j - start) % N + N) % N;
            if (rel >= len) CHECK(col[j] == 0.0);
        }
        // Equal to the band prototype along the support.
        double diff = 0.0;
        for (int t = 0; t < len; ++t)
            diff = std::max(diff, std::abs(col[(start + t) % N] - b.proto[t]));
        CHECK(diff <= 1e-15);
    }
}

TEST_CASE("analysis row equals synthesis column (transpose pair)") {
    WaveletPlan p = WaveletPlan::make(64);
    for (int pos : {0, 13, 40, 63}) {
        std::vector<double> delta(64, 0.0);
        delta[pos] = 1.0;
        auto theta = p.forward_padded(delta);
        for (int i = 0; i < 64; ++i) CHECK(std::abs(theta[i] - p.column(i)[pos]) < 1e-13);
    }
}

TEST_CASE("synthesis is the sum of coefficient-weighted columns") {
    WaveletPlan p = WaveletPlan::make(181);
    Rng rng(5);
    std::vector<double> theta(p.n_padded(), 0.0);
    for (int k = 0; k < 17; ++k)
        theta[rng.next_u64() % p.n_padded()] = rng.normal();
    std::vector<double> manual(p.n_padded(), 0.0);
    for (int i = 0; i < p.n_padded(); ++i) {
        if (theta[i] == 0.0) continue;
        auto col = p.column(i);
        for (int j = 0; j < p.n_padded(); ++j) manual[j] += theta[i] * col[j];
    }
    CHECK(max_abs_diff(p.inverse_padded(theta), manual) <= 1e-13);
}

TEST_CASE("restricted dot, axpy and norm agree with explicit columns") {
    WaveletPlan p = WaveletPlan::make(181);
    auto y = random_signal(181, 21);
    for (int i = 0; i < p.n_padded(); ++i) {
        auto col = p.column_signal(i);
        REQUIRE(static_cast<int>(col.size()) == 181);
        double dref = 0.0, nref = 0.0;
        for (int j = 0; j < 181; ++j) {
            dref += col[j] * y[j];
            nref += col[j] * col[j];
        }
        CHECK(std::abs(p.dot_signal(i, y.data()) - dref) < 1e-12);
        CHECK(std::abs(p.pnorm2(i) - nref) < 1e-12);

        auto r = y;
        p.axpy_signal(i, 0.37, r.data());
        double adiff = 0.0;
        for (int j = 0; j < 181; ++j) adiff = std::max(adiff, std::abs(r[j] - (y[j] + 0.37 * col[j])));
        CHECK(adiff < 1e-14);
    }
}

TEST_CASE("forward is linear") {
    WaveletPlan p = WaveletPlan::make(100);
    auto a = random_signal(100, 31), b = random_signal(100, 32);
    std::vector<double> combo(100);
    for (int j = 0; j < 100; ++j) combo[j] = 2.0 * a[j] - 0.5 * b[j];
    auto ta = p.forward(a), tb = p.forward(b), tc = p.forward(combo);
    double diff = 0.0;
    for (size_t i = 0; i < tc.size(); ++i)
        diff = std::max(diff, std::abs(tc[i] - (2.0 * ta[i] - 0.5 * tb[i])));
    CHECK(diff < 1e-12);
}

TEST_CASE("segmented plan concatenates independent transforms") {
    SegmentedPlan sp = SegmentedPlan::make({181, 97});
    CHECK(sp.n_signal() == 278);
    CHECK(sp.n_coeff() == 256 + 128);
    CHECK(sp.signal_offset(1) == 181);
    CHECK(sp.coeff_offset(1) == 256);
    CHECK(sp.segment_of_coeff(0) == 0);
    CHECK(sp.segment_of_coeff(255) == 0);
    CHECK(sp.segment_of_coeff(256) == 1);
    CHECK_THROWS_AS(sp.segment_of_coeff(384), DomainError);
    CHECK_THROWS_AS(SegmentedPlan::make({}), DomainError);

    auto y = random_signal(278, 41);
    auto back = sp.inverse(sp.forward(y));
    CHECK(max_abs_diff(y, back) <= 1e-12 * max_abs(y));

    // Second segment ignores the first entirely.
    auto y2 = y;
    for (int j = 0; j < 181; ++j) y2[j] += 3.0;
    auto ta = sp.forward(y), tb = sp.forward(y2);
    for (int i = 256; i < 384; ++i) CHECK(ta[i] == tb[i]);
}

TEST_CASE("zero-extension analysis is the adjoint of truncated synthesis") {
    SegmentedPlan sp = SegmentedPlan::make({181, 97});
    auto y = random_signal(278, 51);
    Rng rng(52);
    std::vector<double> theta(sp.n_coeff());
    for (double& t : theta) t = rng.normal();

    auto wy = sp.forward_zeroext(y);
    auto xt = sp.inverse(theta);
    double lhs = std::inner_product(wy.begin(), wy.end(), theta.begin(), 0.0);
    double rhs = std::inner_product(xt.begin(), xt.end(), y.begin(), 0.0);
    CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(std::abs(lhs), 1.0));

    // Componentwise it reproduces dot_signal.
    for (int i = 0; i < sp.n_coeff(); i += 7)
        CHECK(std::abs(wy[i] - sp.dot_signal(i, y.data())) < 1e-12);

    // axpy and pnorm2 route through the right segment.
    auto r = y;
    sp.axpy_signal(300, 1.5, r.data());
    for (int j = 0; j < 181; ++j) CHECK(r[j] == y[j]);
    double n2 = 0.0;
    for (int j = 0; j < 278; ++j) {
        double d = r[j] - y[j];
        n2 += (d / 1.5) * (d / 1.5);
    }
    CHECK(std::abs(n2 - sp.pnorm2(300)) < 1e-10);
}

TEST_CASE("support ranges are clipped and cover exactly the nonzero samples") {
    SegmentedPlan sp = SegmentedPlan::make({181, 97});
    for (int i = 0; i < sp.n_coeff(); ++i) {
        std::pair<int, int> ranges[2];
        int cnt = sp.support_ranges(i, ranges);
        REQUIRE(cnt >= 0);
        REQUIRE(cnt <= 2);
        std::vector<char> inside(sp.n_signal(), 0);
        for (int r = 0; r < cnt; ++r) {
            CHECK(ranges[r].first >= 0);
            CHECK(ranges[r].second <= sp.n_signal());
            CHECK(ranges[r].first < ranges[r].second);
            for (int j = ranges[r].first; j < ranges[r].second; ++j) inside[j] = 1;
        }
        // A unit coefficient synthesizes to zero outside its claimed ranges.
        std::vector<double> theta(sp.n_coeff(), 0.0);
        theta[i] = 1.0;
        auto x = sp.inverse(theta);
        for (int j = 0; j < sp.n_signal(); ++j)
            if (!inside[j]) CHECK(x[j] == 0.0);
    }
}
