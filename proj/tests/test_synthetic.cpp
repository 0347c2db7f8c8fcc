#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lcmon/dsp.hpp"
#include "lcmon/errors.hpp"
#include "lcmon/mrmr.hpp"
#include "lcmon/synthetic.hpp"

using namespace lcmon;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ScenarioConfig clean_dry() {
    ScenarioConfig cfg;
    cfg.condition = Condition::dry;
    cfg.contamination_conductance_us = 1.58;
    cfg.true_u50_kv = synthetic_true_u50_kv(Condition::dry, 1.58);
    cfg.applied_voltage_kv = 0.10 * cfg.true_u50_kv;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("generate: deterministic per seed") {
    const auto a = generate(clean_dry());
    const auto b = generate(clean_dry());
    CHECK(a.waveform.samples == b.waveform.samples);
    CHECK(a.pct_u50 == b.pct_u50);

    ScenarioConfig other = clean_dry();
    other.seed = 6;
    const auto c = generate(other);
    CHECK(a.waveform.samples != c.waveform.samples);
}

TEST_CASE("generate: clean dry scenario is quiet") {
    const auto item = generate(clean_dry());
    const Waveform& w = item.waveform;

    const Fundamental f = extract_fundamental(w);
    const Waveform res = residual(w, f);
    const auto pulses = detect_pulses(res, pulse_threshold(res, DspConfig{}));
    CHECK(pulses.size() <= 1);

    const HarmonicSpectrum spec = harmonic_spectrum(w);
    double distortion = 0.0;
    for (int k = 2; k <= 10; ++k) distortion += spec.at(k) * spec.at(k);
    CHECK(std::sqrt(distortion) < 0.05 * spec.at(1));
}

TEST_CASE("generate: wet amplitude exceeds dry at equal conditions") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ScenarioConfig dry;
        dry.condition = Condition::dry;
        dry.contamination_conductance_us = 8.0;
        dry.applied_voltage_kv = 40.0;
        dry.true_u50_kv = 120.0;
        dry.seed = seed;
        ScenarioConfig wet = dry;
        wet.condition = Condition::wet;
        wet.true_u50_kv = 70.0;  // above the applied voltage either way

        const double dry_amp = extract_fundamental(generate(dry).waveform).amplitude;
        const double wet_amp = extract_fundamental(generate(wet).waveform).amplitude;
        CHECK(wet_amp > dry_amp);
    }
}

TEST_CASE("generate: invalid configs rejected") {
    ScenarioConfig cfg = clean_dry();
    cfg.true_u50_kv = cfg.applied_voltage_kv;  // no margin
    CHECK_THROWS_AS((void)generate(cfg), InvalidArgument);
    cfg = clean_dry();
    cfg.contamination_conductance_us = 0.0;
    CHECK_THROWS_AS((void)generate(cfg), InvalidArgument);
    cfg = clean_dry();
    cfg.duration_s = 0.001;
    CHECK_THROWS_AS((void)generate(cfg), InvalidArgument);
}

TEST_CASE("corpus: labels and manifest consistency") {
    CorpusConfig cfg;
    cfg.n_per_condition = 10;
    cfg.seed = 3;
    const auto corpus = generate_corpus(cfg);
    REQUIRE(corpus.size() == 20);
    for (const auto& item : corpus) {
        CHECK(item.pct_u50 > 0.0);
        CHECK(item.pct_u50 <= 100.0);
        CHECK(item.pct_u50 ==
              doctest::Approx(100.0 * item.scenario.applied_voltage_kv /
                              item.scenario.true_u50_kv)
                  .epsilon(1e-9));
    }
    // First half dry, second half wet by construction.
    CHECK(corpus.front().condition == Condition::dry);
    CHECK(corpus.back().condition == Condition::wet);
}

TEST_CASE("corpus: dataset files are byte-stable per seed") {
    CorpusConfig cfg;
    cfg.n_per_condition = 5;
    cfg.seed = 11;
    const auto dir_a = std::filesystem::temp_directory_path() / "lcmon_corpus_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "lcmon_corpus_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    const auto rows_a = generate_dataset(cfg, dir_a.string());
    const auto rows_b = generate_dataset(cfg, dir_b.string());
    REQUIRE(rows_a.size() == 10);
    REQUIRE(rows_b.size() == 10);

    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
        ++files;
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(dir_b / name));
    }
    CHECK(files == 11);  // 10 waveforms + manifest

    const auto manifest = read_corpus_manifest((dir_a / "corpus_manifest.csv").string());
    REQUIRE(manifest.size() == 10);
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        CHECK(manifest[i].file == rows_a[i].file);
        CHECK(manifest[i].pct_u50 == rows_a[i].pct_u50);
        CHECK(manifest[i].condition == rows_a[i].condition);
    }

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("corpus: fundamental amplitude tracks the regression target") {
    CorpusConfig cfg;
    cfg.n_per_condition = 40;
    cfg.seed = 17;
    const auto corpus = generate_corpus(cfg);
    const FeatureCatalog cat = build_catalog();
    const FeatureMatrix m = extract_matrix(corpus, cat);
    REQUIRE(m.n_rows() == 80);
    const std::size_t amp_col = m.column_index("fundamental_amplitude");

    for (Condition c : {Condition::dry, Condition::wet}) {
        std::vector<double> amp, pct;
        for (std::size_t i = 0; i < m.n_rows(); ++i) {
            if ((*m.condition)[i] != c) continue;
            amp.push_back(m.columns[amp_col][i]);
            pct.push_back((*m.pct_u50)[i]);
        }
        CHECK(spearman(amp, pct) > 0.5);
    }
}

TEST_CASE("corpus: config validation") {
    CorpusConfig cfg;
    cfg.n_per_condition = 0;
    CHECK_THROWS_AS((void)generate_corpus(cfg), InvalidArgument);
    cfg = {};
    cfg.pct_u50_max = 120.0;
    CHECK_THROWS_AS((void)generate_corpus(cfg), InvalidArgument);
    cfg = {};
    cfg.conductance_min_us = -1.0;
    CHECK_THROWS_AS((void)generate_corpus(cfg), InvalidArgument);
}
