#include "nlwqed/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "nlwqed/errors.hpp"

namespace nlwqed::analysis {

namespace {

void require_same_size(std::span<const double> t, std::span<const double> y, const char* what) {
    if (t.size() != y.size()) throw DimensionError(std::string(what) + ": time and value lengths differ");
}

double refine_time(std::span<const double> t, std::span<const double> y, std::size_t i) {
    if (i == 0 || i + 1 >= y.size()) return t[i];
    const double ym = y[i - 1], y0 = y[i], yp = y[i + 1];
    const double denom = ym - 2.0 * y0 + yp;
    if (denom >= 0.0) return t[i];
    const double offset = 0.5 * (ym - yp) / denom;
    const double h = offset >= 0.0 ? t[i + 1] - t[i] : t[i] - t[i - 1];
    return t[i] + std::clamp(offset, -1.0, 1.0) * h;
}

} // namespace

std::vector<std::size_t> local_maxima(std::span<const double> y) {
    std::vector<std::size_t> out;
    std::size_t i = 1;
    while (i + 1 < y.size()) {
        if (y[i] > y[i - 1]) {
            std::size_t j = i;
            while (j + 1 < y.size() && y[j + 1] == y[i]) ++j;
            if (j + 1 < y.size() && y[j + 1] < y[i]) out.push_back(i);
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

double prominence(std::span<const double> y, std::size_t i) {
    if (i >= y.size()) throw DimensionError("prominence: index out of range");
    double left = y[i];
    for (std::size_t k = i; k-- > 0;) {
        if (y[k] > y[i]) break;
        left = std::min(left, y[k]);
    }
    double right = y[i];
    for (std::size_t k = i + 1; k < y.size(); ++k) {
        if (y[k] > y[i]) break;
        right = std::min(right, y[k]);
    }
    return y[i] - std::max(left, right);
}

std::vector<Extremum> prominent_maxima(std::span<const double> t, std::span<const double> y, double rel_prominence) {
    require_same_size(t, y, "prominent_maxima");
    std::vector<Extremum> out;
    if (y.size() < 3) return out;
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double range = *hi - *lo;
    if (range <= 0.0) return out;
    for (std::size_t i : local_maxima(y)) {
        const double p = prominence(y, i);
        if (p >= rel_prominence * range) out.push_back({i, refine_time(t, y, i), y[i], p});
    }
    return out;
}

std::optional<Extremum> first_maximum(std::span<const double> t, std::span<const double> y, double rel_prominence) {
    auto peaks = prominent_maxima(t, y, rel_prominence);
    if (peaks.empty()) return std::nullopt;
    return peaks.front();
}

std::optional<double> rabi_period(std::span<const double> t, std::span<const double> y, double rel_prominence) {
    auto peaks = prominent_maxima(t, y, rel_prominence);
    if (peaks.size() < 2) return std::nullopt;
    return (peaks.back().t - peaks.front().t) / static_cast<double>(peaks.size() - 1);
}

int visible_cycles(std::span<const double> t, std::span<const double> y, double rel_prominence) {
    return static_cast<int>(prominent_maxima(t, y, rel_prominence).size());
}

double max_abs_slope(std::span<const double> t, std::span<const double> y, double t_from) {
    require_same_size(t, y, "max_abs_slope");
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        if (t[i] < t_from) continue;
        worst = std::max(worst, std::abs(y[i + 1] - y[i]) / (t[i + 1] - t[i]));
    }
    return worst;
}

std::vector<SpectralPeak> spectral_peaks(std::span<const double> y, double dt, const SpectrumOptions& options) {
    if (y.size() < 4) throw ConfigError("spectral_peaks: need at least four samples");
    if (!(dt > 0.0)) throw ConfigError("spectral_peaks: sample spacing must be positive");
    const std::size_t n = y.size();

    std::vector<double> w(n);
    double wsum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        wsum += w[i];
        mean += w[i] * y[i];
    }
    mean /= wsum;

    const std::size_t len = std::bit_ceil(n * static_cast<std::size_t>(std::max(1, options.zero_pad)));
    std::vector<double> buf(len, 0.0);
    for (std::size_t i = 0; i < n; ++i) buf[i] = w[i] * (y[i] - mean);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, buf);

    const std::size_t half = len / 2;
    std::vector<double> mag(half + 1);
    for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]) * 2.0 / wsum;

    std::vector<SpectralPeak> peaks;
    for (std::size_t k = 1; k < half; ++k)
        if (mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])
            peaks.push_back({2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(len) * dt), mag[k]});
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.amplitude > b.amplitude; });
    if (!peaks.empty()) {
        const double cut = options.rel_threshold * peaks.front().amplitude;
        std::erase_if(peaks, [cut](const auto& p) { return p.amplitude < cut; });
    }
    return peaks;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_power_law: need two or more paired points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("fit_power_law: inputs must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw ConfigError("fit_power_law: x values are all equal");
    PowerLawFit fit;
    fit.exponent = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.exponent * sx) / n;
    fit.prefactor = std::exp(intercept);
    for (std::size_t i = 0; i < x.size(); ++i)
        fit.max_residual = std::max(fit.max_residual,
                                    std::abs(std::log(y[i]) - intercept - fit.exponent * std::log(x[i])));
    return fit;
}

std::vector<double> log_space(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > 0.0) || n < 1) throw ConfigError("log_space: bounds must be positive and n >= 1");
    if (n == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(n));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1.0));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> lin_space(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("lin_space: n must be >= 1");
    if (n == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1.0);
    out.back() = hi;
    return out;
}

} // namespace nlwqed::analysis
