#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "lcmon/waveform.hpp"

namespace lcmon {

// Mains-frequency sinusoidal component of a record, fitted by a single-bin
// Fourier projection over the largest whole number of mains periods that
// fits the record: reconstructed[i] = amplitude * sin(2*pi*freq*t_i + phase).
struct Fundamental {
    double amplitude = 0.0;  // mA
    double phase = 0.0;      // radians, in (-pi, pi]; 0 when amplitude is 0
    double freq = 0.0;       // Hz, equals the source mains frequency
    std::vector<double> reconstructed;  // mA, same length as the source record
};

// Maximal run of residual samples whose magnitude exceeds the detection
// threshold.
struct Pulse {
    std::size_t start_index = 0;
    std::size_t end_index = 0;    // inclusive
    double peak_amplitude = 0.0;  // max |residual| within the run, mA
    int polarity = 0;             // sign of the residual at the peak
};

// Amplitudes of harmonics 1..10 of the mains frequency.
struct HarmonicSpectrum {
    std::array<double, 10> amplitudes{};  // amplitudes[k-1] = k-th harmonic, mA

    double at(int k) const { return amplitudes.at(static_cast<std::size_t>(k) - 1); }
};

// Filter and pulse-detection parameters for one processing run.
struct DspConfig {
    std::size_t ma_window = 5;
    double es_alpha = 0.3;
    // Detection threshold: the explicit value wins when set; otherwise
    // max(floor, mad_scale * MAD(residual)). MAD is robust against the
    // heavy-tailed pulse content of contaminated records.
    double pulse_threshold_floor_ma = 0.1;
    double pulse_threshold_mad_scale = 3.0;
    std::optional<double> pulse_threshold_ma;
};

// Centered moving average with a symmetric, edge-truncated window (no
// zero-padding, so the filter introduces no artificial edge transients).
// Metadata is preserved. window must be in [1, length].
Waveform moving_average(const Waveform& w, std::size_t window);

// out[0] = in[0]; out[i] = alpha*in[i] + (1-alpha)*out[i-1]. alpha in (0, 1].
Waveform exponential_smoothing(const Waveform& w, double alpha);

// Single-frequency discrete Fourier projection at mains_freq. The projection
// window is the largest whole number of mains periods that fits; a trailing
// partial period is excluded from the projection but still covered by
// `reconstructed`. Throws InsufficientData below one full period.
Fundamental extract_fundamental(const Waveform& w);

// out[i] = w.samples[i] - f.reconstructed[i]; metadata preserved.
Waveform residual(const Waveform& w, const Fundamental& f);

// Threshold implied by `cfg` for this residual.
double pulse_threshold(const Waveform& residual, const DspConfig& cfg);

// Maximal contiguous runs with |residual| > threshold, ordered by start
// index. threshold must be positive.
std::vector<Pulse> detect_pulses(const Waveform& residual, double threshold_ma);

// Harmonics 1..10 of the mains frequency by Fourier projection over the same
// whole-period window rule as extract_fundamental. Requires the 10th
// harmonic to lie strictly below Nyquist.
HarmonicSpectrum harmonic_spectrum(const Waveform& w);

}  // namespace lcmon
