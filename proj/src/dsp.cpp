#include "lcmon/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lcmon/errors.hpp"

namespace lcmon {

namespace {

// Number of whole mains periods covered by n samples, and the sample count
// of that whole-period window. The small epsilon absorbs representation
// noise in n * mains / rate when the ratio is an exact integer.
struct PeriodWindow {
    long periods = 0;
    std::size_t samples = 0;
};

PeriodWindow whole_period_window(const Waveform& w) {
    if (!(w.sample_rate > 0.0) || !(w.mains_freq > 0.0))
        throw InvalidArgument("dsp: sample_rate and mains_freq must be positive");
    const double n = static_cast<double>(w.samples.size());
    PeriodWindow out;
    out.periods = static_cast<long>(std::floor(n * w.mains_freq / w.sample_rate + 1e-9));
    if (out.periods < 1) return out;
    auto m = static_cast<std::size_t>(
        std::llround(static_cast<double>(out.periods) * w.sample_rate / w.mains_freq));
    out.samples = std::min(m, w.samples.size());
    return out;
}

// Projection of the record onto sin/cos at frequency `freq` over the first
// m samples; returns the component amplitude. For whole-period windows with
// an integer number of samples per period this is exact for any signal made
// of mains harmonics below Nyquist.
struct SineFit {
    double amplitude = 0.0;
    double phase = 0.0;
};

SineFit project(const std::vector<double>& x, std::size_t m, double freq, double rate) {
    const double omega = 2.0 * std::numbers::pi * freq / rate;
    double ss = 0.0;
    double sc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double a = omega * static_cast<double>(i);
        ss += x[i] * std::sin(a);
        sc += x[i] * std::cos(a);
    }
    const double a = 2.0 * ss / static_cast<double>(m);  // coefficient of sin
    const double b = 2.0 * sc / static_cast<double>(m);  // coefficient of cos
    SineFit fit;
    fit.amplitude = std::hypot(a, b);
    fit.phase = fit.amplitude > 0.0 ? std::atan2(b, a) : 0.0;
    return fit;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

Waveform moving_average(const Waveform& w, std::size_t window) {
    const std::size_t n = w.samples.size();
    if (window == 0 || window > n)
        throw InvalidArgument("moving_average: window must be in [1, length]");

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + w.samples[i];

    Waveform out = w;
    const long left = static_cast<long>((window - 1) / 2);
    const long right = static_cast<long>(window / 2);
    for (std::size_t i = 0; i < n; ++i) {
        const long lo = std::max<long>(0, static_cast<long>(i) - left);
        const long hi = std::min<long>(static_cast<long>(n) - 1, static_cast<long>(i) + right);
        out.samples[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

Waveform exponential_smoothing(const Waveform& w, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw InvalidArgument("exponential_smoothing: alpha must be in (0, 1]");
    Waveform out = w;
    for (std::size_t i = 1; i < out.samples.size(); ++i)
        out.samples[i] = alpha * w.samples[i] + (1.0 - alpha) * out.samples[i - 1];
    return out;
}

Fundamental extract_fundamental(const Waveform& w) {
    const auto win = whole_period_window(w);
    if (win.periods < 1)
        throw InsufficientData("extract_fundamental: record shorter than one mains period");

    const SineFit fit = project(w.samples, win.samples, w.mains_freq, w.sample_rate);
    Fundamental f;
    f.amplitude = fit.amplitude;
    f.phase = fit.phase;
    f.freq = w.mains_freq;
    f.reconstructed.resize(w.samples.size());
    const double omega = 2.0 * std::numbers::pi * w.mains_freq / w.sample_rate;
    for (std::size_t i = 0; i < f.reconstructed.size(); ++i)
        f.reconstructed[i] = f.amplitude * std::sin(omega * static_cast<double>(i) + f.phase);
    return f;
}

Waveform residual(const Waveform& w, const Fundamental& f) {
    if (w.samples.size() != f.reconstructed.size())
        throw InvalidArgument("residual: waveform and fundamental lengths differ");
    Waveform out = w;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = w.samples[i] - f.reconstructed[i];
    return out;
}

double pulse_threshold(const Waveform& residual, const DspConfig& cfg) {
    if (cfg.pulse_threshold_ma) return *cfg.pulse_threshold_ma;
    const double med = median_of(residual.samples);
    std::vector<double> dev(residual.samples.size());
    for (std::size_t i = 0; i < dev.size(); ++i)
        dev[i] = std::abs(residual.samples[i] - med);
    const double mad = median_of(std::move(dev));
    return std::max(cfg.pulse_threshold_floor_ma, cfg.pulse_threshold_mad_scale * mad);
}

std::vector<Pulse> detect_pulses(const Waveform& residual, double threshold_ma) {
    if (!(threshold_ma > 0.0))
        throw InvalidArgument("detect_pulses: threshold must be positive");

    std::vector<Pulse> pulses;
    const auto& x = residual.samples;
    std::size_t i = 0;
    while (i < x.size()) {
        if (std::abs(x[i]) <= threshold_ma) {
            ++i;
            continue;
        }
        Pulse p;
        p.start_index = i;
        double peak = 0.0;
        while (i < x.size() && std::abs(x[i]) > threshold_ma) {
            if (std::abs(x[i]) > peak) {
                peak = std::abs(x[i]);
                p.polarity = x[i] > 0.0 ? 1 : -1;
            }
            p.end_index = i;
            ++i;
        }
        p.peak_amplitude = peak;
        pulses.push_back(p);
    }
    return pulses;
}

HarmonicSpectrum harmonic_spectrum(const Waveform& w) {
    if (!(10.0 * w.mains_freq < w.sample_rate / 2.0))
        throw InvalidArgument("harmonic_spectrum: 10th harmonic at or above Nyquist");
    const auto win = whole_period_window(w);
    if (win.periods < 1)
        throw InsufficientData("harmonic_spectrum: record shorter than one mains period");

    HarmonicSpectrum spec;
    for (int k = 1; k <= 10; ++k) {
        spec.amplitudes[static_cast<std::size_t>(k) - 1] =
            project(w.samples, win.samples, static_cast<double>(k) * w.mains_freq,
                    w.sample_rate)
                .amplitude;
    }
    return spec;
}

}  // namespace lcmon
