#include "lcmon/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "lcmon/errors.hpp"
#include "lcmon/rng.hpp"
#include "lcmon/text.hpp"

namespace lcmon {

namespace {

// Amplitude model: grows with surface conductance and applied voltage, a wet
// surface conducting several times more than a dry one. The conductance
// exponent is deliberately sublinear so that, across a corpus where voltage
// tracks the flashover margin, the amplitude stays strongly rank-correlated
// with that margin (the regression target) rather than being swamped by the
// contamination spread.
double fundamental_amplitude_ma(Condition c, double g_us, double v_kv) {
    const double scale = c == Condition::wet ? 0.25 : 0.1;
    return scale * std::pow(g_us, 0.35) * v_kv;
}

// Discharge "stress" in [0, 1]: how close the scenario sits to flashover,
// weighted by contamination. Drives distortion and pulse activity.
double stress_of(double pct_u50, double g_us) {
    return std::clamp(pct_u50 / 100.0 * g_us / 20.0, 0.0, 1.0);
}

}  // namespace

double synthetic_true_u50_kv(Condition condition, double conductance_us) {
    return condition == Condition::wet ? 90.0 / (1.0 + 0.06 * conductance_us)
                                       : 150.0 / (1.0 + 0.04 * conductance_us);
}

LabeledWaveform generate(const ScenarioConfig& cfg) {
    if (!(cfg.contamination_conductance_us > 0.0))
        throw InvalidArgument("generate: conductance must be positive");
    if (!(cfg.applied_voltage_kv > 0.0))
        throw InvalidArgument("generate: applied_voltage must be positive");
    if (!(cfg.true_u50_kv > cfg.applied_voltage_kv))
        throw InvalidArgument("generate: true_u50 must exceed the applied voltage");
    if (!(cfg.sample_rate > 0.0) || !(cfg.mains_freq > 0.0) ||
        cfg.sample_rate < 20.0 * cfg.mains_freq)
        throw InvalidArgument("generate: sample_rate must be >= 20x mains_freq");
    if (!(cfg.duration_s * cfg.mains_freq >= 1.0))
        throw InvalidArgument("generate: duration must cover one mains period");

    const double pct = 100.0 * cfg.applied_voltage_kv / cfg.true_u50_kv;
    const double stress = stress_of(pct, cfg.contamination_conductance_us);
    const double a1 = fundamental_amplitude_ma(cfg.condition,
                                               cfg.contamination_conductance_us,
                                               cfg.applied_voltage_kv);
    const bool wet = cfg.condition == Condition::wet;

    // Harmonic mix. The asymmetric surface discharge of a wet string shows up
    // as a stronger even (2nd) harmonic; odd distortion grows with stress.
    // The wet and dry second-harmonic ranges overlap a little, so the
    // wet/dry decision stays learnable without being a lookup.
    const double frac2 = wet ? 0.03 + 0.05 * stress : 0.004 + 0.045 * stress;
    const double frac3 = 0.015 + 0.13 * stress;
    const double frac5 = 0.008 + 0.06 * stress;
    const double frac7 = 0.004 + 0.03 * stress;

    const auto n = static_cast<std::size_t>(
        std::llround(cfg.duration_s * cfg.sample_rate));
    Rng rng(cfg.seed);
    const double phase1 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double phase2 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double phase3 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double phase5 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double phase7 = rng.uniform(-std::numbers::pi, std::numbers::pi);

    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.mains_freq = cfg.mains_freq;
    w.applied_voltage = cfg.applied_voltage_kv;
    w.samples.resize(n);
    const double omega = 2.0 * std::numbers::pi * cfg.mains_freq / cfg.sample_rate;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = omega * static_cast<double>(i);
        w.samples[i] = a1 * (std::sin(t + phase1) + frac2 * std::sin(2.0 * t + phase2) +
                             frac3 * std::sin(3.0 * t + phase3) +
                             frac5 * std::sin(5.0 * t + phase5) +
                             frac7 * std::sin(7.0 * t + phase7));
    }

    // Partial-discharge pulses: a Poisson train of short half-sine bursts
    // with heavy-tailed (log-normal) amplitudes so the mA histogram features
    // stay populated across bins.
    const double pulse_rate_hz = (wet ? 60.0 : 20.0) * std::pow(stress, 1.5);
    const std::size_t n_pulses = rng.poisson(pulse_rate_hz * cfg.duration_s);
    for (std::size_t p = 0; p < n_pulses; ++p) {
        const std::size_t center = rng.below(n);
        const std::size_t width = 3 + rng.below(10);
        const double amp =
            rng.lognormal(std::log(0.3 + 10.0 * stress), 1.2);
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        for (std::size_t k = 0; k < width; ++k) {
            const std::size_t idx = center + k;
            if (idx >= n) break;
            const double window =
                std::sin(std::numbers::pi * static_cast<double>(k + 1) /
                         static_cast<double>(width + 1));
            w.samples[idx] += sign * amp * window;
        }
    }

    const double noise_sigma = 0.005 * a1 + 0.01;
    for (std::size_t i = 0; i < n; ++i) w.samples[i] += noise_sigma * rng.normal();

    LabeledWaveform out;
    out.waveform = std::move(w);
    out.condition = cfg.condition;
    out.pct_u50 = pct;
    out.scenario = cfg;
    return out;
}

std::vector<LabeledWaveform> generate_corpus(const CorpusConfig& cfg) {
    if (cfg.n_per_condition < 1)
        throw InvalidArgument("generate_corpus: n_per_condition must be >= 1");
    if (!(cfg.conductance_min_us > 0.0) ||
        !(cfg.conductance_max_us >= cfg.conductance_min_us))
        throw InvalidArgument("generate_corpus: bad conductance range");
    if (!(cfg.pct_u50_min > 0.0) || !(cfg.pct_u50_max <= 100.0) ||
        !(cfg.pct_u50_max >= cfg.pct_u50_min))
        throw InvalidArgument("generate_corpus: pct range must sit in (0, 100]");

    std::vector<LabeledWaveform> corpus;
    corpus.reserve(2 * cfg.n_per_condition);
    std::uint64_t scenario_index = 0;
    for (Condition condition : {Condition::dry, Condition::wet}) {
        for (std::size_t i = 0; i < cfg.n_per_condition; ++i, ++scenario_index) {
            Rng rng(Rng::derive(cfg.seed, scenario_index));
            ScenarioConfig sc;
            sc.condition = condition;
            sc.contamination_conductance_us = std::exp(rng.uniform(
                std::log(cfg.conductance_min_us), std::log(cfg.conductance_max_us)));
            sc.true_u50_kv =
                synthetic_true_u50_kv(condition, sc.contamination_conductance_us);
            const double pct = rng.uniform(cfg.pct_u50_min, cfg.pct_u50_max);
            sc.applied_voltage_kv = pct / 100.0 * sc.true_u50_kv;
            sc.sample_rate = cfg.sample_rate;
            sc.mains_freq = cfg.mains_freq;
            sc.duration_s = cfg.duration_s;
            sc.seed = Rng::derive(cfg.seed, 0x100000 + scenario_index);
            corpus.push_back(generate(sc));
        }
    }
    return corpus;
}

std::vector<CorpusManifestRow> generate_dataset(const CorpusConfig& cfg,
                                                const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory: " + out_dir);

    const auto corpus = generate_corpus(cfg);
    std::vector<CorpusManifestRow> rows;
    rows.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& item = corpus[i];
        char name[48];
        std::snprintf(name, sizeof name, "lc_%04zu_%s.csv", i,
                      std::string(to_string(item.condition)).c_str());
        write_waveform_csv(item.waveform,
                           (std::filesystem::path(out_dir) / name).string());
        rows.push_back({name, item.condition,
                        item.scenario.contamination_conductance_us,
                        item.scenario.applied_voltage_kv, item.scenario.true_u50_kv,
                        item.pct_u50});
    }
    write_corpus_manifest(
        rows, (std::filesystem::path(out_dir) / "corpus_manifest.csv").string());
    return rows;
}

void write_corpus_manifest(std::span<const CorpusManifestRow> rows,
                           const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << "file,condition,conductance_us,applied_voltage_kv,true_u50_kv,pct_u50\n";
    for (const auto& r : rows) {
        out << r.file << ',' << to_string(r.condition) << ','
            << fmt_double(r.conductance_us) << ',' << fmt_double(r.applied_voltage_kv)
            << ',' << fmt_double(r.true_u50_kv) << ',' << fmt_double(r.pct_u50) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<CorpusManifestRow> read_corpus_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty manifest");
    if (trim(line) != "file,condition,conductance_us,applied_voltage_kv,true_u50_kv,pct_u50")
        throw IoError(path + ": unexpected manifest header");
    std::vector<CorpusManifestRow> rows;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        if (cells.size() != 6) throw IoError(path + ": wrong manifest column count");
        rows.push_back({std::string(trim(cells[0])), condition_from_string(trim(cells[1])),
                        parse_double(trim(cells[2])), parse_double(trim(cells[3])),
                        parse_double(trim(cells[4])), parse_double(trim(cells[5]))});
    }
    return rows;
}

FeatureMatrix extract_matrix(std::span<const LabeledWaveform> corpus,
                             const FeatureCatalog& catalog, const DspConfig& dsp) {
    FeatureMatrix m = FeatureMatrix::from_catalog(catalog);
    m.condition.emplace();
    m.pct_u50.emplace();
    for (const auto& item : corpus) {
        m.add_row(extract(item.waveform, catalog, dsp).values);
        m.condition->push_back(item.condition);
        m.pct_u50->push_back(item.pct_u50);
    }
    return m;
}

}  // namespace lcmon
