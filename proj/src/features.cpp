#include "lcmon/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "lcmon/errors.hpp"
#include "lcmon/text.hpp"

namespace lcmon {

namespace {

constexpr double kLogEpsMa = 1e-9;       // floor for ln/log10/1/x arguments
constexpr double kTransformCap = 1e12;   // ceiling for exp / 10^x outputs

// The seven derived transforms applied to non-negative mA quantities, in
// catalog order. Arguments and outputs are clamped so downstream feature
// vectors never carry NaN or infinities.
struct TransformDef {
    const char* suffix;
    const char* text;
    double (*fn)(double);
};

constexpr TransformDef kTransforms[] = {
    {"square", "squared", [](double x) { return x * x; }},
    {"sqrt", "square root of", [](double x) { return std::sqrt(x); }},
    {"ln", "natural log of", [](double x) { return std::log(std::max(x, kLogEpsMa)); }},
    {"log10", "common log of", [](double x) { return std::log10(std::max(x, kLogEpsMa)); }},
    {"exp", "exponential of", [](double x) { return std::min(std::exp(x), kTransformCap); }},
    {"inverse", "inverse of", [](double x) { return 1.0 / std::max(x, kLogEpsMa); }},
    {"pow10", "ten to the power of",
     [](double x) { return std::min(std::pow(10.0, x), kTransformCap); }},
};

constexpr double kMaBinEdges[] = {0.0, 0.2, 0.5, 1.0, 2.0,  3.0, 4.0,
                                  5.0, 7.5, 10.0, 15.0, 20.0};  // last bin open
constexpr double kPctBinEdges[] = {0.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0};

std::string ma_bin_id(std::size_t i) {
    static const char* names[] = {"lt_0p2", "0p2_0p5", "0p5_1", "1_2",   "2_3",   "3_4",
                                  "4_5",    "5_7p5",   "7p5_10", "10_15", "15_20", "ge_20"};
    return std::string("pulse_mA_") + names[i];
}

std::string pct_bin_id(std::size_t i) {
    static const char* names[] = {"lt_50",   "50_100",  "100_200", "200_300",
                                  "300_400", "400_500", "ge_500"};
    return std::string("pulse_pct_") + names[i];
}

void append_residual_stats(std::vector<FeatureDef>& out, const char* prefix,
                           const char* filter_name, FeatureGroup group) {
    auto add = [&](std::string id_part, std::string text) {
        out.push_back({std::string(prefix) + id_part,
                       text + " (" + filter_name + " branch)", group});
    };
    add("residual_mean", "mean of the residual");
    add("residual_std", "population standard deviation of the residual");
    add("residual_min", "minimum of the residual");
    add("residual_max", "maximum of the residual");
    add("residual_absmax", "largest residual magnitude");
    for (const auto& t : kTransforms)
        add(std::string("residual_absmax_") + t.suffix,
            std::string(t.text) + " the largest residual magnitude");
    add("residual_p25", "25th percentile of the residual");
    add("residual_p50", "50th percentile of the residual");
    add("residual_p75", "75th percentile of the residual");
    add("pulse_mean_amplitude", "mean peak amplitude of detected pulses");
    add("pulse_count", "number of detected pulses");
}

// Percentile with linear interpolation between order statistics.
double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted.front();
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct ResidualStats {
    double mean = 0, stddev = 0, min = 0, max = 0, absmax = 0;
    double p25 = 0, p50 = 0, p75 = 0;
    double pulse_mean = 0;
    double pulse_count = 0;
};

ResidualStats residual_stats(const Waveform& res, const std::vector<Pulse>& pulses) {
    ResidualStats s;
    const auto& x = res.samples;
    const auto n = static_cast<double>(x.size());
    double sum = 0;
    for (double v : x) sum += v;
    s.mean = sum / n;
    double ss = 0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / n);
    s.min = *std::min_element(x.begin(), x.end());
    s.max = *std::max_element(x.begin(), x.end());
    s.absmax = std::max(std::abs(s.min), std::abs(s.max));
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    s.p25 = percentile(sorted, 25.0);
    s.p50 = percentile(sorted, 50.0);
    s.p75 = percentile(sorted, 75.0);
    s.pulse_count = static_cast<double>(pulses.size());
    if (!pulses.empty()) {
        double psum = 0;
        for (const auto& p : pulses) psum += p.peak_amplitude;
        s.pulse_mean = psum / static_cast<double>(pulses.size());
    }
    return s;
}

void emit_residual_features(std::vector<double>& out, const ResidualStats& s) {
    out.push_back(s.mean);
    out.push_back(s.stddev);
    out.push_back(s.min);
    out.push_back(s.max);
    out.push_back(s.absmax);
    for (const auto& t : kTransforms) out.push_back(t.fn(s.absmax));
    out.push_back(s.p25);
    out.push_back(s.p50);
    out.push_back(s.p75);
    out.push_back(s.pulse_mean);
    out.push_back(s.pulse_count);
}

}  // namespace

std::string_view to_string(Condition c) { return c == Condition::wet ? "wet" : "dry"; }

Condition condition_from_string(std::string_view s) {
    if (s == "wet") return Condition::wet;
    if (s == "dry") return Condition::dry;
    throw InvalidArgument("condition must be 'wet' or 'dry', got '" + std::string(s) + "'");
}

std::string_view to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::residual_stat_ma: return "residual-stat-MA";
        case FeatureGroup::residual_stat_es: return "residual-stat-ES";
        case FeatureGroup::fundamental_amplitude: return "fundamental-amplitude";
        case FeatureGroup::pulse_bin_ma: return "pulse-bin-mA";
        case FeatureGroup::pulse_bin_percent: return "pulse-bin-percent";
        case FeatureGroup::harmonic: return "harmonic";
        case FeatureGroup::applied_voltage: return "applied-voltage";
    }
    return "?";
}

std::vector<std::string> FeatureCatalog::ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
}

std::size_t FeatureCatalog::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].id == id) return i;
    throw InvalidArgument("catalog has no feature '" + std::string(id) + "'");
}

FeatureCatalog build_catalog(const CatalogConfig& config) {
    FeatureCatalog cat;
    if (config.residual_stats_ma)
        append_residual_stats(cat.entries, "ma_", "moving average",
                              FeatureGroup::residual_stat_ma);
    if (config.residual_stats_es)
        append_residual_stats(cat.entries, "es_", "exponential smoothing",
                              FeatureGroup::residual_stat_es);
    if (config.fundamental_amplitude) {
        cat.entries.push_back({"fundamental_amplitude",
                               "fundamental amplitude from the MA-filtered signal",
                               FeatureGroup::fundamental_amplitude});
        for (const auto& t : kTransforms)
            cat.entries.push_back({std::string("fundamental_amplitude_") + t.suffix,
                                   std::string(t.text) + " the fundamental amplitude",
                                   FeatureGroup::fundamental_amplitude});
    }
    if (config.pulse_bins_ma) {
        for (std::size_t i = 0; i < 12; ++i)
            cat.entries.push_back(
                {ma_bin_id(i), "pulse count, mA range " + std::to_string(i),
                 FeatureGroup::pulse_bin_ma});
    }
    if (config.pulse_bins_percent) {
        for (std::size_t i = 0; i < 7; ++i)
            cat.entries.push_back(
                {pct_bin_id(i),
                 "pulse count, percent-of-fundamental range " + std::to_string(i),
                 FeatureGroup::pulse_bin_percent});
    }
    if (config.harmonics) {
        for (int k = 1; k <= 10; ++k) {
            char id[16];
            std::snprintf(id, sizeof id, "harmonic_%02d", k);
            cat.entries.push_back({id, "amplitude of harmonic " + std::to_string(k),
                                   FeatureGroup::harmonic});
        }
    }
    if (config.applied_voltage)
        cat.entries.push_back({"applied_voltage", "applied phase-to-ground voltage (kV)",
                               FeatureGroup::applied_voltage});

    bool full = config.residual_stats_ma && config.residual_stats_es &&
                config.fundamental_amplitude && config.pulse_bins_ma &&
                config.pulse_bins_percent && config.harmonics && config.applied_voltage;
    if (full) {
        cat.version = "v1:full";
    } else {
        std::string tags;
        auto tag = [&](bool on, const char* t) {
            if (!on) return;
            if (!tags.empty()) tags += '+';
            tags += t;
        };
        tag(config.residual_stats_ma, "ma");
        tag(config.residual_stats_es, "es");
        tag(config.fundamental_amplitude, "fund");
        tag(config.pulse_bins_ma, "binmA");
        tag(config.pulse_bins_percent, "binpct");
        tag(config.harmonics, "harm");
        tag(config.applied_voltage, "uapp");
        cat.version = "v1:" + tags;
    }
    return cat;
}

std::array<std::size_t, 12> pulse_bin_counts_ma(const std::vector<Pulse>& pulses) {
    std::array<std::size_t, 12> counts{};
    for (const auto& p : pulses) {
        std::size_t bin = 11;
        for (std::size_t i = 1; i < 12; ++i) {
            if (p.peak_amplitude < kMaBinEdges[i]) {
                bin = i - 1;
                break;
            }
        }
        ++counts[bin];
    }
    return counts;
}

std::array<std::size_t, 7> pulse_bin_counts_percent(const std::vector<Pulse>& pulses,
                                                    double fundamental_amplitude) {
    std::array<std::size_t, 7> counts{};
    for (const auto& p : pulses) {
        std::size_t bin = 6;
        if (fundamental_amplitude > 0.0) {
            const double pct = 100.0 * p.peak_amplitude / fundamental_amplitude;
            for (std::size_t i = 1; i < 7; ++i) {
                if (pct < kPctBinEdges[i]) {
                    bin = i - 1;
                    break;
                }
            }
        }
        ++counts[bin];
    }
    return counts;
}

FeatureVector extract(const Waveform& w, const FeatureCatalog& catalog,
                      const DspConfig& dsp) {
    validate_waveform(w);

    const Waveform ma = moving_average(w, dsp.ma_window);
    const Waveform es = exponential_smoothing(w, dsp.es_alpha);
    const Fundamental fund_ma = extract_fundamental(ma);
    const Fundamental fund_es = extract_fundamental(es);
    // Residual = raw minus the fundamental fitted on the filtered signal.
    const Waveform res_ma = residual(w, fund_ma);
    const Waveform res_es = residual(w, fund_es);
    const auto pulses_ma = detect_pulses(res_ma, pulse_threshold(res_ma, dsp));
    const auto pulses_es = detect_pulses(res_es, pulse_threshold(res_es, dsp));

    // Every feature the full catalog defines, keyed by id; the requested
    // catalog (possibly a pruned one) is then projected out of it. Values do
    // not depend on which groups a catalog enables.
    const FeatureCatalog full = build_catalog();
    std::vector<double> values;
    values.reserve(full.size());
    emit_residual_features(values, residual_stats(res_ma, pulses_ma));
    emit_residual_features(values, residual_stats(res_es, pulses_es));
    values.push_back(fund_ma.amplitude);
    for (const auto& t : kTransforms) values.push_back(t.fn(fund_ma.amplitude));
    for (std::size_t c : pulse_bin_counts_ma(pulses_ma))
        values.push_back(static_cast<double>(c));
    for (std::size_t c : pulse_bin_counts_percent(pulses_ma, fund_ma.amplitude))
        values.push_back(static_cast<double>(c));
    bool want_harmonics = false;
    for (const auto& e : catalog.entries)
        if (e.group == FeatureGroup::harmonic) want_harmonics = true;
    if (want_harmonics) {
        for (double a : harmonic_spectrum(w).amplitudes) values.push_back(a);
    } else {
        for (int k = 0; k < 10; ++k) values.push_back(0.0);
    }
    values.push_back(w.applied_voltage);

    std::unordered_map<std::string_view, double> by_id;
    by_id.reserve(full.size());
    for (std::size_t i = 0; i < full.size(); ++i)
        by_id.emplace(full.entries[i].id, values[i]);

    FeatureVector fv;
    fv.catalog_version = catalog.version;
    fv.values.reserve(catalog.size());
    for (const auto& e : catalog.entries) {
        auto it = by_id.find(e.id);
        if (it == by_id.end())
            throw InvalidArgument("extract: unknown feature id '" + e.id + "'");
        fv.values.push_back(it->second);
    }
    return fv;
}

FeatureMatrix FeatureMatrix::from_catalog(const FeatureCatalog& catalog) {
    FeatureMatrix m;
    m.feature_ids = catalog.ids();
    m.catalog_version = catalog.version;
    m.columns.resize(m.feature_ids.size());
    return m;
}

void FeatureMatrix::add_row(std::span<const double> values) {
    if (values.size() != columns.size())
        throw InvalidArgument("matrix row width does not match feature count");
    for (std::size_t j = 0; j < columns.size(); ++j) columns[j].push_back(values[j]);
}

std::vector<double> FeatureMatrix::row(std::size_t i) const {
    std::vector<double> out(columns.size());
    row_into(i, out);
    return out;
}

void FeatureMatrix::row_into(std::size_t i, std::vector<double>& out) const {
    out.resize(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) out[j] = columns[j][i];
}

std::size_t FeatureMatrix::column_index(std::string_view id) const {
    for (std::size_t j = 0; j < feature_ids.size(); ++j)
        if (feature_ids[j] == id) return j;
    throw InvalidArgument("matrix has no feature '" + std::string(id) + "'");
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> ids) const {
    FeatureMatrix out;
    out.catalog_version = catalog_version;
    out.condition = condition;
    out.pct_u50 = pct_u50;
    for (const auto& id : ids) {
        out.feature_ids.push_back(id);
        out.columns.push_back(columns[column_index(id)]);
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.feature_ids = feature_ids;
    out.catalog_version = catalog_version;
    out.columns.assign(columns.size(), {});
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out.columns[j].reserve(indices.size());
        for (std::size_t i : indices) out.columns[j].push_back(columns[j].at(i));
    }
    if (condition) {
        out.condition.emplace();
        for (std::size_t i : indices) out.condition->push_back(condition->at(i));
    }
    if (pct_u50) {
        out.pct_u50.emplace();
        for (std::size_t i : indices) out.pct_u50->push_back(pct_u50->at(i));
    }
    return out;
}

std::vector<double> FeatureMatrix::condition_targets() const {
    if (!condition) throw InvalidArgument("matrix carries no condition labels");
    std::vector<double> out(condition->size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (*condition)[i] == Condition::wet ? 1.0 : 0.0;
    return out;
}

void write_matrix_csv(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write matrix file: " + path);
    for (std::size_t j = 0; j < m.feature_ids.size(); ++j) {
        if (j) out << ',';
        out << m.feature_ids[j];
    }
    if (m.condition) out << ",label_condition";
    if (m.pct_u50) out << ",label_pct_u50";
    out << '\n';
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
        for (std::size_t j = 0; j < m.columns.size(); ++j) {
            if (j) out << ',';
            out << fmt_double(m.columns[j][i]);
        }
        if (m.condition) out << ',' << to_string((*m.condition)[i]);
        if (m.pct_u50) out << ',' << fmt_double((*m.pct_u50)[i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

FeatureMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");

    FeatureMatrix m;
    auto header = split(trim(line), ',');
    std::size_t n_features = header.size();
    bool has_condition = false;
    bool has_pct = false;
    // Label columns, when present, are the trailing ones.
    while (n_features > 0) {
        auto last = trim(header[n_features - 1]);
        if (last == "label_pct_u50" && !has_pct && !has_condition) {
            has_pct = true;
            --n_features;
        } else if (last == "label_condition" && !has_condition) {
            has_condition = true;
            --n_features;
        } else {
            break;
        }
    }
    for (std::size_t j = 0; j < n_features; ++j)
        m.feature_ids.emplace_back(trim(header[j]));
    m.columns.resize(n_features);
    if (has_condition) m.condition.emplace();
    if (has_pct) m.pct_u50.emplace();

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        if (cells.size() != header.size())
            throw IoError(path + ":" + std::to_string(lineno) + ": wrong column count");
        for (std::size_t j = 0; j < n_features; ++j)
            m.columns[j].push_back(parse_double(trim(cells[j])));
        std::size_t c = n_features;
        if (has_condition) m.condition->push_back(condition_from_string(trim(cells[c++])));
        if (has_pct) m.pct_u50->push_back(parse_double(trim(cells[c++])));
    }

    // A column set drawn from the default catalog keeps its version stamp:
    // entry values do not depend on which groups were enabled.
    const FeatureCatalog def = build_catalog();
    bool subset = !m.feature_ids.empty();
    for (const auto& id : m.feature_ids) {
        bool found = false;
        for (const auto& e : def.entries)
            if (e.id == id) {
                found = true;
                break;
            }
        if (!found) {
            subset = false;
            break;
        }
    }
    m.catalog_version = subset ? def.version : "custom";
    return m;
}

void write_catalog_json(const FeatureCatalog& catalog, const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : catalog.entries) {
        arr.push_back({{"id", e.id},
                       {"description", e.description},
                       {"group", std::string(to_string(e.group))}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write catalog file: " + path);
    out << arr.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace lcmon
