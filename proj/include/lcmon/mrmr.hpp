#pragma once

#include <span>
#include <string>
#include <vector>

#include "lcmon/features.hpp"

namespace lcmon {

enum class TargetKind { categorical, continuous };

std::string_view to_string(TargetKind k);

struct MrmrConfig {
    int bins = 10;                   // equal-frequency bins for MI estimation
    double redundancy_floor = 0.01;  // keeps near-orthogonal candidates finite
};

struct SelectionResult {
    std::vector<std::string> ranked_ids;  // selection order
    std::vector<double> scores;           // score of the feature chosen per iteration
    std::vector<std::string> feature_ids; // input feature order
    std::vector<double> relevance;        // MI with the target, input feature order
    MrmrConfig config;
    TargetKind target_kind = TargetKind::continuous;

    double relevance_of(std::string_view id) const;
};

// Equal-frequency discretization; equal values always share a bin, so a
// constant column collapses into one bin. Heavy-tailed pulse features keep
// populated bins this way where equal-width binning would not.
std::vector<int> equal_frequency_bins(std::span<const double> x, int bins);

// Plug-in mutual information (nats) of the discretized joint distribution.
// x is binned equal-frequency; a categorical target is used as-is and a
// continuous one is binned identically. Constant inputs give 0.
double mutual_information(std::span<const double> x, std::span<const double> y,
                          int bins, TargetKind y_kind = TargetKind::continuous);

// Spearman rank correlation with average ranks for ties. Zero rank variance
// on either side is reported through `degenerate` and scored as 0.
double spearman(std::span<const double> x, std::span<const double> y,
                bool* degenerate = nullptr);

// Average (tie-adjusted) 1-based ranks.
std::vector<double> average_ranks(std::span<const double> x);

// Greedy max-relevance / min-redundancy ranking. Iteration 0 takes the
// feature with the highest MI against the target; later iterations maximize
// MI divided by the mean absolute Spearman correlation against everything
// already selected (floored at config.redundancy_floor). Ties resolve to the
// earliest column.
SelectionResult mrmr_rank(const FeatureMatrix& features, std::span<const double> target,
                          TargetKind kind, std::size_t k, const MrmrConfig& config = {});

// Ranking report: {target_kind, ranked: [{id, score, relevance}], config}.
void write_selection_json(const SelectionResult& result, const std::string& path);
SelectionResult read_selection_json(const std::string& path);

}  // namespace lcmon
