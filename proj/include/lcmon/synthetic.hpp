#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcmon/features.hpp"
#include "lcmon/waveform.hpp"

namespace lcmon {

// One synthetic measurement scenario. The generator is a test fixture, not a
// physical model: its contract is the set of monotonicities the pipeline
// needs (amplitude grows with conductance, voltage and wetness; pulse
// activity grows with the voltage's proximity to flashover).
struct ScenarioConfig {
    Condition condition = Condition::dry;
    double contamination_conductance_us = 5.0;  // surface layer conductance
    double applied_voltage_kv = 40.0;
    double true_u50_kv = 100.0;  // must exceed the applied voltage
    double sample_rate = 10000.0;
    double mains_freq = 50.0;
    double duration_s = 0.2;
    std::uint64_t seed = 0;
};

struct LabeledWaveform {
    Waveform waveform;
    Condition condition = Condition::dry;
    double pct_u50 = 0.0;  // 100 * applied_voltage / true_u50
    ScenarioConfig scenario;
};

// Flashover level implied by contamination and wetness; decreasing in
// conductance, lower wet than dry.
double synthetic_true_u50_kv(Condition condition, double conductance_us);

// Deterministic per seed.
LabeledWaveform generate(const ScenarioConfig& config);

struct CorpusConfig {
    std::size_t n_per_condition = 50;
    double conductance_min_us = 1.5;
    double conductance_max_us = 20.0;
    double pct_u50_min = 30.0;  // applied voltage as % of the flashover level
    double pct_u50_max = 98.0;
    double sample_rate = 10000.0;
    double mains_freq = 50.0;
    double duration_s = 0.2;
    std::uint64_t seed = 0;
};

// n dry + n wet scenarios over a log-uniform conductance grid; per-scenario
// seeds derive from (seed, scenario index) so generation order does not
// matter.
std::vector<LabeledWaveform> generate_corpus(const CorpusConfig& config);

struct CorpusManifestRow {
    std::string file;
    Condition condition = Condition::dry;
    double conductance_us = 0.0;
    double applied_voltage_kv = 0.0;
    double true_u50_kv = 0.0;
    double pct_u50 = 0.0;
};

// Writes one waveform CSV per scenario plus `corpus_manifest.csv` into
// out_dir; returns the manifest rows.
std::vector<CorpusManifestRow> generate_dataset(const CorpusConfig& config,
                                                const std::string& out_dir);

void write_corpus_manifest(std::span<const CorpusManifestRow> rows,
                           const std::string& path);
std::vector<CorpusManifestRow> read_corpus_manifest(const std::string& path);

// Feature matrix with labels for a generated corpus.
FeatureMatrix extract_matrix(std::span<const LabeledWaveform> corpus,
                             const FeatureCatalog& catalog, const DspConfig& dsp = {});

}  // namespace lcmon
