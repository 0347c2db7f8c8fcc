#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcmon/dsp.hpp"
#include "lcmon/waveform.hpp"

namespace lcmon {

// Surface-moisture condition of the insulator string.
enum class Condition { dry = 0, wet = 1 };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

enum class FeatureGroup {
    residual_stat_ma,
    residual_stat_es,
    fundamental_amplitude,
    pulse_bin_ma,
    pulse_bin_percent,
    harmonic,
    applied_voltage,
};

std::string_view to_string(FeatureGroup g);

struct FeatureDef {
    std::string id;           // stable, unique
    std::string description;
    FeatureGroup group;
};

// Which feature groups a catalog includes. The full default catalog has 72
// entries: 17 residual statistics per filter, the fundamental amplitude and
// its 7 derived transforms, 12 mA pulse bins, 7 percent pulse bins,
// harmonics 1..10 and the applied voltage.
struct CatalogConfig {
    bool residual_stats_ma = true;
    bool residual_stats_es = true;
    bool fundamental_amplitude = true;
    bool pulse_bins_ma = true;
    bool pulse_bins_percent = true;
    bool harmonics = true;
    bool applied_voltage = true;
};

struct FeatureCatalog {
    std::vector<FeatureDef> entries;
    std::string version;  // stamps the entry set and order

    std::size_t size() const { return entries.size(); }
    std::vector<std::string> ids() const;
    // Index of a feature id, or npos-like failure via InvalidArgument.
    std::size_t index_of(std::string_view id) const;
};

// Deterministic: the same config always yields the same entries in the same
// order, with the same version stamp.
FeatureCatalog build_catalog(const CatalogConfig& config = {});

struct FeatureVector {
    std::vector<double> values;  // aligned with a FeatureCatalog
    std::string catalog_version;
};

// Full extraction pipeline for one record. Residuals are raw minus the
// fundamental fitted on the filtered signal, one per filter; pulse bins and
// the percent reference use the MA branch.
FeatureVector extract(const Waveform& w, const FeatureCatalog& catalog,
                      const DspConfig& dsp = {});

// Pulse histograms, exposed for direct use and testing. The 12 mA bins have
// edges {0, .2, .5, 1, 2, 3, 4, 5, 7.5, 10, 15, 20, inf}; the 7 percent bins
// {0, 50, 100, 200, 300, 400, 500, inf} relative to the fundamental
// amplitude. A non-positive fundamental puts every pulse in the last percent
// bin (a pulse is arbitrarily large relative to no fundamental).
std::array<std::size_t, 12> pulse_bin_counts_ma(const std::vector<Pulse>& pulses);
std::array<std::size_t, 7> pulse_bin_counts_percent(const std::vector<Pulse>& pulses,
                                                    double fundamental_amplitude);

// Labeled feature rows shared by selection, training and evaluation.
// Columns are stored per feature; label vectors, when present, cover every
// row.
struct FeatureMatrix {
    std::vector<std::string> feature_ids;
    std::string catalog_version;
    std::vector<std::vector<double>> columns;  // columns[j][i], j-th feature
    std::optional<std::vector<Condition>> condition;
    std::optional<std::vector<double>> pct_u50;

    std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::size_t n_cols() const { return columns.size(); }

    static FeatureMatrix from_catalog(const FeatureCatalog& catalog);

    void add_row(std::span<const double> values);
    std::vector<double> row(std::size_t i) const;
    void row_into(std::size_t i, std::vector<double>& out) const;
    std::size_t column_index(std::string_view id) const;

    // Projection onto a feature subset, in the given order; labels carried.
    FeatureMatrix select_columns(std::span<const std::string> ids) const;
    FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

    // Condition labels as 0/1 doubles (wet = 1). Throws when absent.
    std::vector<double> condition_targets() const;
};

// Feature-matrix CSV: first row lists the feature ids, then one row per
// record; optional trailing `label_condition` (wet|dry) and `label_pct_u50`
// columns carry training labels.
void write_matrix_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_matrix_csv(const std::string& path);

// Catalog JSON export: an array of {id, description, group}.
void write_catalog_json(const FeatureCatalog& catalog, const std::string& path);

}  // namespace lcmon
