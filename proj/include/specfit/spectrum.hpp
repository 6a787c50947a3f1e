#ifndef SPECFIT_SPECTRUM_HPP_
#define SPECFIT_SPECTRUM_HPP_

#include <string>
#include <utility>
#include <vector>

namespace specfit {

// One 1D acquisition: ascending ppm axis plus intensities. A spectrum
// restricted to a union of disjoint windows keeps the points of each
// interval as a contiguous segment; segment_offsets marks where each
// segment starts (always at least {0}).
struct Spectrum {
    std::string id;
    std::vector<double> ppm;
    std::vector<double> intensity;
    double spectrometer_freq = 0.0;  // MHz; 0 means unknown
    std::vector<int> segment_offsets{0};

    int size() const { return static_cast<int>(ppm.size()); }
    std::vector<int> segment_lengths() const;
    double max_abs_intensity() const;

    // Throws on broken invariants (length mismatch, non-ascending axis,
    // non-finite intensities).
    void validate() const;
};

// Union of closed ppm intervals.
struct PpmWindow {
    std::vector<std::pair<double, double>> intervals;

    static PpmWindow all();  // matches everything
    static PpmWindow single(double lo, double hi);
    void add(double lo, double hi);

    bool empty() const { return intervals.empty(); }
    bool contains(double x) const;

    // Sort and merge overlapping intervals; throws DomainError on lo >= hi.
    void normalize();
};

// Points with ppm inside the window, order preserved; each disjoint
// interval becomes its own segment. Throws EmptyWindowError when nothing
// is selected.
Spectrum restrict_window(const Spectrum& spec, const PpmWindow& win);

// Identity when all axes already match; otherwise linear interpolation of
// every spectrum onto the first spectrum's axis clipped to the range the
// inputs share. Throws AxisError when the ranges do not overlap.
std::vector<Spectrum> common_axis(const std::vector<Spectrum>& specs);

}  // namespace specfit

#endif  // SPECFIT_SPECTRUM_HPP_
