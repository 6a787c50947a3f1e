#ifndef SPECFIT_WAVELET_HPP_
#define SPECFIT_WAVELET_HPP_

#include <span>
#include <vector>

namespace specfit {

// Orthonormal periodized discrete wavelet transform with symlet-6 filters
// (12 taps, 6 vanishing moments). Signals of length n are padded by
// symmetric reflection to the next power of two; the transform itself is
// square and orthonormal on the padded domain.
//
// Coefficient layout is level-major: level-1 details first, deeper detail
// levels after, the final approximation block last.
class WaveletPlan {
public:
    struct Band {
        int level;          // 1..levels for details; levels for the approximation
        bool approx;
        int count;          // coefficients in this band
        int offset;         // first coefficient index of the band
        int step;           // signal-domain shift between adjacent basis functions
        int support_start;  // start of basis 0's support (mod n_padded)
        int support_len;    // == n_padded when dense
        std::vector<double> proto;  // basis 0 values along its support
    };

    // levels == 0 requests the default depth k-3 (at least 1) for
    // n_padded == 2^k.
    static WaveletPlan make(int n_signal, int levels = 0);

    int n_signal() const { return n_signal_; }
    int n_padded() const { return n_padded_; }
    int levels() const { return levels_; }
    const std::vector<double>& lowpass() const { return lo_; }
    const std::vector<double>& highpass() const { return hi_; }
    const std::vector<Band>& bands() const { return bands_; }

    // Analysis of an unpadded signal (reflection padding applied first).
    std::vector<double> forward(std::span<const double> y) const;

    // Analysis of an already padded vector of length n_padded.
    std::vector<double> forward_padded(std::span<const double> x) const;

    // Synthesis truncated to the unpadded region (length n_signal).
    std::vector<double> inverse(std::span<const double> theta) const;

    // Synthesis on the full padded domain.
    std::vector<double> inverse_padded(std::span<const double> theta) const;

    // i-th synthesis basis function on the padded domain.
    std::vector<double> column(int i) const;
    // Same basis function cut down to the unpadded region.
    std::vector<double> column_signal(int i) const;

    // Squared norm of basis i restricted to the first n_signal samples.
    double pnorm2(int i) const { return pnorm2_[i]; }

    // <r, w_i> over the first n_signal samples; r must have length n_signal.
    double dot_signal(int i, const double* r) const;

    // r[j] += alpha * w_i[j] over the first n_signal samples.
    void axpy_signal(int i, double alpha, double* r) const;

    // Signal-domain support of basis i as (start, len) mod n_padded.
    std::pair<int, int> support(int i) const;

    int band_of(int i) const;

private:
    int n_signal_ = 0;
    int n_padded_ = 0;
    int levels_ = 0;
    std::vector<double> lo_, hi_;
    std::vector<Band> bands_;
    std::vector<double> pnorm2_;
};

// Wavelet plans for a signal split into contiguous segments (one per
// disjoint fit-window interval). Each segment gets its own padded
// transform; coefficient vectors are the concatenation of the per-segment
// blocks.
class SegmentedPlan {
public:
    static SegmentedPlan make(const std::vector<int>& segment_lengths, int levels = 0);

    int n_signal() const { return n_signal_; }
    int n_coeff() const { return n_coeff_; }
    const std::vector<WaveletPlan>& plans() const { return plans_; }
    int segment_of_coeff(int i) const;
    int signal_offset(int s) const { return signal_offset_[s]; }
    int coeff_offset(int s) const { return coeff_offset_[s]; }

    // Analysis with per-segment reflection padding; y has length n_signal.
    std::vector<double> forward(std::span<const double> y) const;

    // Analysis with per-segment zero extension (adjoint of the truncated
    // synthesis): theta[i] = <w_i, y restricted to its segment>.
    std::vector<double> forward_zeroext(std::span<const double> y) const;

    // Truncated synthesis, length n_signal.
    std::vector<double> inverse(std::span<const double> theta) const;

    double pnorm2(int i) const;
    double dot_signal(int i, const double* y) const;        // y: length n_signal
    void axpy_signal(int i, double alpha, double* y) const;  // y: length n_signal

    // Signal-domain support of coefficient i in concatenated coordinates,
    // clipped to the segment, as up to two [begin, end) ranges.
    int support_ranges(int i, std::pair<int, int> out[2]) const;

private:
    std::vector<WaveletPlan> plans_;
    std::vector<int> signal_offset_, coeff_offset_;
    int n_signal_ = 0;
    int n_coeff_ = 0;
};

}  // namespace specfit

#endif  // SPECFIT_WAVELET_HPP_
