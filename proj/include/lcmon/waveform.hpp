#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lcmon {

// One uniformly sampled leakage-current record in mA, with the metadata
// needed to interpret it: sampling rate, mains frequency, and the
// phase-to-ground voltage applied while it was captured.
struct Waveform {
    std::vector<double> samples;   // mA
    double sample_rate = 0.0;      // Hz
    double mains_freq = 50.0;      // Hz
    double applied_voltage = 0.0;  // kV, phase-to-ground

    std::size_t size() const { return samples.size(); }
    double samples_per_period() const { return sample_rate / mains_freq; }
};

// Contract checks: positive rates and voltage, sample_rate >= 20x the mains
// frequency (harmonics 1..10 resolvable below Nyquist) and at least one full
// mains period of samples. Throws InvalidArgument.
void validate_waveform(const Waveform& w);

// CSV layout: a header line
//   # sample_rate=<Hz> mains_freq=<Hz> applied_voltage=<kV>
// followed by one sample (mA) per line. All three header keys are required;
// files missing any of them are rejected.
Waveform read_waveform_csv(const std::string& path);
void write_waveform_csv(const Waveform& w, const std::string& path);

}  // namespace lcmon
