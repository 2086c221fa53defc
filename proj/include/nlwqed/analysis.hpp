#pragma once

// Post-processing of sampled time series: extrema, Rabi periods, spectra and
// power-law fits.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nlwqed::analysis {

// Indices of strict interior local maxima (plateaus report their first sample).
std::vector<std::size_t> local_maxima(std::span<const double> y);

// Topographic prominence of the maximum at index i: height above the higher of
// the lowest points reached on each side before a higher sample (or the end).
double prominence(std::span<const double> y, std::size_t i);

struct Extremum {
    std::size_t index = 0;
    double t = 0.0;     // parabolic refinement through the neighbouring samples
    double value = 0.0;
    double prominence = 0.0;
};

// Maxima whose prominence is at least rel_prominence times the series range.
std::vector<Extremum> prominent_maxima(std::span<const double> t, std::span<const double> y,
                                       double rel_prominence = 0.1);

std::optional<Extremum> first_maximum(std::span<const double> t, std::span<const double> y,
                                      double rel_prominence = 0.1);

// Mean spacing of successive prominent maxima; nullopt with fewer than two.
std::optional<double> rabi_period(std::span<const double> t, std::span<const double> y,
                                  double rel_prominence = 0.1);

// Number of prominent maxima: each one is a rise and a visible fall.
int visible_cycles(std::span<const double> t, std::span<const double> y, double rel_prominence = 0.1);

// Largest |dy/dt| by forward differences over samples with t >= t_from.
double max_abs_slope(std::span<const double> t, std::span<const double> y, double t_from);

struct SpectralPeak {
    double frequency = 0.0; // angular, in inverse units of t
    double amplitude = 0.0;
};

struct SpectrumOptions {
    int zero_pad = 4;            // transform length multiplier (rounded up to a power of two)
    double rel_threshold = 0.1;  // keep peaks at least this fraction of the largest
};

// Hann-windowed FFT of y on a uniform grid with spacing dt, after subtracting
// the window-weighted mean. The zero-frequency bin is excluded. Peaks are local
// maxima of the magnitude, sorted by amplitude descending.
std::vector<SpectralPeak> spectral_peaks(std::span<const double> y, double dt, const SpectrumOptions& options = {});

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double max_residual = 0.0; // in log space
};

// Least-squares fit of log y = log a + b log x; all inputs must be positive.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

// n points log-spaced on [lo, hi] inclusive.
std::vector<double> log_space(double lo, double hi, int n);
std::vector<double> lin_space(double lo, double hi, int n);

} // namespace nlwqed::analysis
