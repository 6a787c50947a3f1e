#include "specfit/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "specfit/errors.hpp"

namespace specfit {

namespace {

// Symlet-6 scaling filter (least-asymmetric Daubechies family, 6 vanishing
// moments, 12 taps). The published double-precision table only satisfies
// the filter equations to ~1e-12, which leaks into multi-level round trips;
// these taps were Newton-refined against the exact defining system
// (double-shift orthogonality + 6 vanishing moments) so the residuals sit
// at double rounding. Renormalized to unit energy at plan construction.
constexpr double kSym6[12] = {
    0.01540410932704482429925,   0.003490712084222162515316, -0.1179901111485200254042,
    -0.04831174258569805497105,  0.4910559419279737330419,   0.7876411410286509960718,
    0.3379294217281658327144,    -0.07263752278637658346404, -0.02106029251237084799154,
    0.04472490177078138466299,   0.001767711864254007741006, -0.007800708325032380414221};

constexpr int kTaps = 12;

int next_pow2_log(int n) {
    int k = 0;
    while ((1 << k) < n) ++k;
    return k;
}

// Half-sample symmetric extension index (period 2n).
inline int reflect_index(int j, int n) {
    int p = j % (2 * n);
    return p < n ? p : 2 * n - 1 - p;
}

void analyze_stage(const double* x, int m, const double* lo, const double* hi, double* a,
                   double* d) {
    int half = m / 2;
    for (int k = 0; k < half; ++k) {
        int base = 2 * k;
        double sa = 0.0, sd = 0.0;
        if (base + kTaps <= m) {
            for (int t = 0; t < kTaps; ++t) {
                double xv = x[base + t];
                sa += lo[t] * xv;
                sd += hi[t] * xv;
            }
        } else {
            for (int t = 0; t < kTaps; ++t) {
                double xv = x[(base + t) % m];
                sa += lo[t] * xv;
                sd += hi[t] * xv;
            }
        }
        a[k] = sa;
        d[k] = sd;
    }
}

// Transpose of analyze_stage; valid as the inverse because the transform is
// orthonormal.
void synth_stage(const double* a, const double* d, int half, const double* lo, const double* hi,
                 double* out) {
    int m = 2 * half;
    std::memset(out, 0, sizeof(double) * m);
    for (int k = 0; k < half; ++k) {
        int base = 2 * k;
        double av = a[k], dv = d[k];
        if (base + kTaps <= m) {
            for (int t = 0; t < kTaps; ++t) out[base + t] += lo[t] * av + hi[t] * dv;
        } else {
            for (int t = 0; t < kTaps; ++t) out[(base + t) % m] += lo[t] * av + hi[t] * dv;
        }
    }
}

}  // namespace

WaveletPlan WaveletPlan::make(int n_signal, int levels) {
    if (n_signal < 2) throw DomainError("wavelet plan requires a signal of length >= 2");
    WaveletPlan p;
    p.n_signal_ = n_signal;
    int k = next_pow2_log(n_signal);
    p.n_padded_ = 1 << k;
    if (levels == 0) levels = std::max(1, k - 3);
    if (levels < 1 || levels > k) throw DomainError("wavelet levels out of range");
    p.levels_ = levels;

    double energy = 0.0;
    for (double c : kSym6) energy += c * c;
    double scale = 1.0 / std::sqrt(energy);
    p.lo_.resize(kTaps);
    p.hi_.resize(kTaps);
    for (int t = 0; t < kTaps; ++t) p.lo_[t] = kSym6[t] * scale;
    for (int t = 0; t < kTaps; ++t) p.hi_[t] = ((t & 1) ? -1.0 : 1.0) * p.lo_[kTaps - 1 - t];

    int offset = 0;
    for (int l = 1; l <= levels; ++l) {
        Band b;
        b.level = l;
        b.approx = false;
        b.count = p.n_padded_ >> l;
        b.offset = offset;
        b.step = 1 << l;
        offset += b.count;
        p.bands_.push_back(std::move(b));
    }
    Band approx;
    approx.level = levels;
    approx.approx = true;
    approx.count = p.n_padded_ >> levels;
    approx.offset = offset;
    approx.step = 1 << levels;
    p.bands_.push_back(std::move(approx));

    // Synthesis of a unit coefficient at position 0 always writes indices
    // 0, 1, ... so every band's prototype support starts at sample 0;
    // length follows len <- 2*len + (taps - 2) per synthesis stage.
    for (Band& b : p.bands_) {
        int len = kTaps;
        for (int l = 1; l < b.level; ++l) len = 2 * len + (kTaps - 2);
        b.support_start = 0;
        b.support_len = std::min(len, p.n_padded_);
        std::vector<double> unit(p.n_padded_, 0.0);
        unit[b.offset] = 1.0;
        std::vector<double> v = p.inverse_padded(unit);
        b.proto.assign(v.begin(), v.begin() + b.support_len);
    }

    p.pnorm2_.resize(p.n_padded_);
    for (int i = 0; i < p.n_padded_; ++i) {
        const Band& b = p.bands_[p.band_of(i)];
        int pos = i - b.offset;
        int j0 = (b.support_start + pos * b.step) % p.n_padded_;
        double acc = 0.0;
        int c1 = std::min(b.support_len, p.n_padded_ - j0);
        int c1c = std::min(c1, std::max(0, n_signal - j0));
        for (int t = 0; t < c1c; ++t) acc += b.proto[t] * b.proto[t];
        int rem = b.support_len - c1;
        int remc = std::min(rem, n_signal);
        for (int t = 0; t < remc; ++t) acc += b.proto[c1 + t] * b.proto[c1 + t];
        p.pnorm2_[i] = acc;
    }
    return p;
}

int WaveletPlan::band_of(int i) const {
    if (i < 0 || i >= n_padded_) throw DomainError("wavelet coefficient index out of range");
    int lo = 0, hi = static_cast<int>(bands_.size()) - 1;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (bands_[mid].offset <= i)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

std::vector<double> WaveletPlan::forward(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != n_signal_)
        throw DomainError("forward: signal length does not match plan");
    std::vector<double> x(n_padded_);
    for (int j = 0; j < n_padded_; ++j) x[j] = y[reflect_index(j, n_signal_)];
    return forward_padded(x);
}

std::vector<double> WaveletPlan::forward_padded(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_padded_)
        throw DomainError("forward_padded: vector length does not match plan");
    std::vector<double> theta(n_padded_);
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> a, d;
    int m = n_padded_;
    for (int l = 1; l <= levels_; ++l) {
        int half = m / 2;
        a.resize(half);
        d.resize(half);
        analyze_stage(cur.data(), m, lo_.data(), hi_.data(), a.data(), d.data());
        std::copy(d.begin(), d.end(), theta.begin() + bands_[l - 1].offset);
        cur.swap(a);
        m = half;
    }
    std::copy(cur.begin(), cur.begin() + m, theta.begin() + bands_.back().offset);
    return theta;
}

std::vector<double> WaveletPlan::inverse_padded(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != n_padded_)
        throw DomainError("inverse: coefficient length does not match plan");
    int m = n_padded_ >> levels_;
    std::vector<double> cur(theta.begin() + bands_.back().offset,
                            theta.begin() + bands_.back().offset + m);
    std::vector<double> next;
    for (int l = levels_; l >= 1; --l) {
        next.resize(2 * m);
        synth_stage(cur.data(), theta.data() + bands_[l - 1].offset, m, lo_.data(), hi_.data(),
                    next.data());
        cur.swap(next);
        m *= 2;
    }
    return cur;
}

std::vector<double> WaveletPlan::inverse(std::span<const double> theta) const {
    std::vector<double> full = inverse_padded(theta);
    full.resize(n_signal_);
    return full;
}

std::vector<double> WaveletPlan::column(int i) const {
    if (i < 0 || i >= n_padded_) throw DomainError("wavelet column index out of range");
    std::vector<double> unit(n_padded_, 0.0);
    unit[i] = 1.0;
    return inverse_padded(unit);
}

std::vector<double> WaveletPlan::column_signal(int i) const {
    std::vector<double> full = column(i);
    full.resize(n_signal_);
    return full;
}

double WaveletPlan::dot_signal(int i, const double* r) const {
    const Band& b = bands_[band_of(i)];
    int pos = i - b.offset;
    int j0 = (b.support_start + pos * b.step) % n_padded_;
    const double* pr = b.proto.data();
    double acc = 0.0;
    int c1 = std::min(b.support_len, n_padded_ - j0);
    int c1c = std::min(c1, std::max(0, n_signal_ - j0));
    for (int t = 0; t < c1c; ++t) acc += pr[t] * r[j0 + t];
    int rem = b.support_len - c1;
    int remc = std::min(rem, n_signal_);
    for (int t = 0; t < remc; ++t) acc += pr[c1 + t] * r[t];
    return acc;
}

void WaveletPlan::axpy_signal(int i, double alpha, double* r) const {
    const Band& b = bands_[band_of(i)];
    int pos = i - b.offset;
    int j0 = (b.support_start + pos * b.step) % n_padded_;
    const double* pr = b.proto.data();
    int c1 = std::min(b.support_len, n_padded_ - j0);
    int c1c = std::min(c1, std::max(0, n_signal_ - j0));
    for (int t = 0; t < c1c; ++t) r[j0 + t] += alpha * pr[t];
    int rem = b.support_len - c1;
    int remc = std::min(rem, n_signal_);
    for (int t = 0; t < remc; ++t) r[t] += alpha * pr[c1 + t];
}

std::pair<int, int> WaveletPlan::support(int i) const {
    const Band& b = bands_[band_of(i)];
    int pos = i - b.offset;
    return {(b.support_start + pos * b.step) % n_padded_, b.support_len};
}

SegmentedPlan SegmentedPlan::make(const std::vector<int>& segment_lengths, int levels) {
    if (segment_lengths.empty()) throw DomainError("segmented plan requires >= 1 segment");
    SegmentedPlan sp;
    for (int len : segment_lengths) {
        sp.signal_offset_.push_back(sp.n_signal_);
        sp.coeff_offset_.push_back(sp.n_coeff_);
        WaveletPlan p = WaveletPlan::make(len, levels);
        sp.n_signal_ += p.n_signal();
        sp.n_coeff_ += p.n_padded();
        sp.plans_.push_back(std::move(p));
    }
    return sp;
}

int SegmentedPlan::segment_of_coeff(int i) const {
    if (i < 0 || i >= n_coeff_) throw DomainError("coefficient index out of range");
    int s = static_cast<int>(coeff_offset_.size()) - 1;
    while (s > 0 && coeff_offset_[s] > i) --s;
    return s;
}

std::vector<double> SegmentedPlan::forward(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != n_signal_) throw DomainError("forward: length mismatch");
    std::vector<double> theta(n_coeff_);
    for (size_t s = 0; s < plans_.size(); ++s) {
        auto seg = plans_[s].forward(y.subspan(signal_offset_[s], plans_[s].n_signal()));
        std::copy(seg.begin(), seg.end(), theta.begin() + coeff_offset_[s]);
    }
    return theta;
}

std::vector<double> SegmentedPlan::forward_zeroext(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != n_signal_) throw DomainError("forward: length mismatch");
    std::vector<double> theta(n_coeff_);
    for (size_t s = 0; s < plans_.size(); ++s) {
        const WaveletPlan& p = plans_[s];
        std::vector<double> x(p.n_padded(), 0.0);
        std::copy_n(y.data() + signal_offset_[s], p.n_signal(), x.begin());
        auto seg = p.forward_padded(x);
        std::copy(seg.begin(), seg.end(), theta.begin() + coeff_offset_[s]);
    }
    return theta;
}

std::vector<double> SegmentedPlan::inverse(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != n_coeff_) throw DomainError("inverse: length mismatch");
    std::vector<double> y(n_signal_);
    for (size_t s = 0; s < plans_.size(); ++s) {
        auto seg = plans_[s].inverse(theta.subspan(coeff_offset_[s], plans_[s].n_padded()));
        std::copy(seg.begin(), seg.end(), y.begin() + signal_offset_[s]);
    }
    return y;
}

double SegmentedPlan::pnorm2(int i) const {
    int s = segment_of_coeff(i);
    return plans_[s].pnorm2(i - coeff_offset_[s]);
}

double SegmentedPlan::dot_signal(int i, const double* y) const {
    int s = segment_of_coeff(i);
    return plans_[s].dot_signal(i - coeff_offset_[s], y + signal_offset_[s]);
}

void SegmentedPlan::axpy_signal(int i, double alpha, double* y) const {
    int s = segment_of_coeff(i);
    plans_[s].axpy_signal(i - coeff_offset_[s], alpha, y + signal_offset_[s]);
}

int SegmentedPlan::support_ranges(int i, std::pair<int, int> out[2]) const {
    int s = segment_of_coeff(i);
    const WaveletPlan& p = plans_[s];
    auto [start, len] = p.support(i - coeff_offset_[s]);
    int base = signal_offset_[s];
    int n = p.n_signal();
    int N = p.n_padded();
    int count = 0;
    int c1 = std::min(len, N - start);
    int end1 = std::min(start + c1, n);
    if (start < n && end1 > start) out[count++] = {base + start, base + end1};
    int rem = len - c1;
    int end2 = std::min(rem, n);
    if (end2 > 0) out[count++] = {base, base + end2};
    return count;
}

}  // namespace specfit
