#include "lcmon/mrmr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "lcmon/errors.hpp"

namespace lcmon {

namespace {

bool is_constant(std::span<const double> x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] != x[0]) return false;
    return true;
}

// Category ids for a label-like column: distinct values in sorted order.
std::vector<int> category_codes(std::span<const double> y) {
    std::vector<double> uniq(y.begin(), y.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<int> codes(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        codes[i] = static_cast<int>(
            std::lower_bound(uniq.begin(), uniq.end(), y[i]) - uniq.begin());
    }
    return codes;
}

double entropy_from_joint(const std::vector<std::vector<std::size_t>>& joint,
                          std::size_t n) {
    // MI = sum p log(p / (px py)) over populated cells.
    const std::size_t rows = joint.size();
    const std::size_t cols = rows ? joint[0].size() : 0;
    std::vector<std::size_t> row_sum(rows, 0), col_sum(cols, 0);
    for (std::size_t a = 0; a < rows; ++a)
        for (std::size_t b = 0; b < cols; ++b) {
            row_sum[a] += joint[a][b];
            col_sum[b] += joint[a][b];
        }
    const double dn = static_cast<double>(n);
    double mi = 0.0;
    for (std::size_t a = 0; a < rows; ++a) {
        if (!row_sum[a]) continue;
        for (std::size_t b = 0; b < cols; ++b) {
            if (!joint[a][b]) continue;
            const double p = static_cast<double>(joint[a][b]) / dn;
            const double px = static_cast<double>(row_sum[a]) / dn;
            const double py = static_cast<double>(col_sum[b]) / dn;
            mi += p * std::log(p / (px * py));
        }
    }
    return std::max(mi, 0.0);
}

}  // namespace

std::string_view to_string(TargetKind k) {
    return k == TargetKind::categorical ? "categorical" : "continuous";
}

std::vector<int> equal_frequency_bins(std::span<const double> x, int bins) {
    if (bins < 2) throw InvalidArgument("equal_frequency_bins: bins must be >= 2");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<int> bin(n, 0);
    int prev_bin = 0;
    for (std::size_t j = 0; j < n; ++j) {
        int b = static_cast<int>(static_cast<std::size_t>(bins) * j / n);
        // Equal values must share a bin.
        if (j > 0 && x[order[j]] == x[order[j - 1]]) b = prev_bin;
        bin[order[j]] = b;
        prev_bin = b;
    }
    return bin;
}

double mutual_information(std::span<const double> x, std::span<const double> y,
                          int bins, TargetKind y_kind) {
    if (x.size() != y.size())
        throw InvalidArgument("mutual_information: length mismatch");
    if (x.size() < 4) throw InvalidArgument("mutual_information: need >= 4 samples");
    if (bins < 2) throw InvalidArgument("mutual_information: bins must be >= 2");
    if (is_constant(x) || is_constant(y)) return 0.0;

    const std::vector<int> bx = equal_frequency_bins(x, bins);
    const std::vector<int> by = y_kind == TargetKind::categorical
                                    ? category_codes(y)
                                    : equal_frequency_bins(y, bins);
    const int nx = *std::max_element(bx.begin(), bx.end()) + 1;
    const int ny = *std::max_element(by.begin(), by.end()) + 1;
    std::vector<std::vector<std::size_t>> joint(
        static_cast<std::size_t>(nx), std::vector<std::size_t>(static_cast<std::size_t>(ny), 0));
    for (std::size_t i = 0; i < x.size(); ++i)
        ++joint[static_cast<std::size_t>(bx[i])][static_cast<std::size_t>(by[i])];
    return entropy_from_joint(joint, x.size());
}

std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t j = 0;
    while (j < n) {
        std::size_t k = j;
        while (k + 1 < n && x[order[k + 1]] == x[order[j]]) ++k;
        const double mean_rank = 0.5 * static_cast<double>(j + k) + 1.0;
        for (std::size_t t = j; t <= k; ++t) ranks[order[t]] = mean_rank;
        j = k + 1;
    }
    return ranks;
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y, bool* degenerate) {
    if (x.size() != y.size()) throw InvalidArgument("spearman: length mismatch");
    if (x.size() < 2) throw InvalidArgument("spearman: need >= 2 samples");
    if (degenerate) *degenerate = false;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry, degenerate);
}

SelectionResult mrmr_rank(const FeatureMatrix& features, std::span<const double> target,
                          TargetKind kind, std::size_t k, const MrmrConfig& config) {
    const std::size_t nf = features.n_cols();
    const std::size_t n = features.n_rows();
    if (k > nf) throw InvalidArgument("mrmr_rank: k exceeds feature count");
    if (n < 4) throw InvalidArgument("mrmr_rank: need >= 4 samples");
    if (target.size() != n) throw InvalidArgument("mrmr_rank: target length mismatch");

    SelectionResult res;
    res.config = config;
    res.target_kind = kind;
    res.feature_ids = features.feature_ids;
    res.relevance.resize(nf);
    for (std::size_t f = 0; f < nf; ++f)
        res.relevance[f] = mutual_information(features.columns[f], target, config.bins, kind);

    // Rank vectors once; each redundancy term is then one Pearson pass.
    std::vector<std::vector<double>> ranks(nf);
    for (std::size_t f = 0; f < nf; ++f) ranks[f] = average_ranks(features.columns[f]);

    std::vector<bool> selected(nf, false);
    std::vector<double> redundancy_sum(nf, 0.0);
    std::size_t last_pick = 0;
    for (std::size_t it = 0; it < k; ++it) {
        std::size_t best = nf;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < nf; ++f) {
            if (selected[f]) continue;
            if (it > 0) redundancy_sum[f] += std::abs(pearson(ranks[f], ranks[last_pick], nullptr));
            double score;
            if (it == 0) {
                score = res.relevance[f];
            } else {
                const double mean_red = redundancy_sum[f] / static_cast<double>(it);
                score = res.relevance[f] / std::max(mean_red, config.redundancy_floor);
            }
            if (score > best_score) {  // strict: ties keep the earliest column
                best_score = score;
                best = f;
            }
        }
        selected[best] = true;
        last_pick = best;
        res.ranked_ids.push_back(features.feature_ids[best]);
        res.scores.push_back(best_score);
    }
    return res;
}

double SelectionResult::relevance_of(std::string_view id) const {
    for (std::size_t i = 0; i < feature_ids.size(); ++i)
        if (feature_ids[i] == id) return relevance[i];
    throw InvalidArgument("selection result has no feature '" + std::string(id) + "'");
}

void write_selection_json(const SelectionResult& result, const std::string& path) {
    nlohmann::json ranked = nlohmann::json::array();
    for (std::size_t i = 0; i < result.ranked_ids.size(); ++i) {
        ranked.push_back({{"id", result.ranked_ids[i]},
                          {"score", result.scores[i]},
                          {"relevance", result.relevance_of(result.ranked_ids[i])}});
    }
    nlohmann::json doc{
        {"target_kind", std::string(to_string(result.target_kind))},
        {"ranked", ranked},
        {"config",
         {{"bins", result.config.bins}, {"redundancy_floor", result.config.redundancy_floor}}},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write ranking file: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

SelectionResult read_selection_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ranking file: " + path);
    try {
        nlohmann::json doc;
        in >> doc;
        SelectionResult res;
        const auto kind = doc.at("target_kind").get<std::string>();
        if (kind == "categorical")
            res.target_kind = TargetKind::categorical;
        else if (kind == "continuous")
            res.target_kind = TargetKind::continuous;
        else
            throw IoError(path + ": unknown target_kind '" + kind + "'");
        for (const auto& row : doc.at("ranked")) {
            res.ranked_ids.push_back(row.at("id").get<std::string>());
            res.scores.push_back(row.at("score").get<double>());
            res.feature_ids.push_back(res.ranked_ids.back());
            res.relevance.push_back(row.at("relevance").get<double>());
        }
        const auto& cfg = doc.at("config");
        res.config.bins = cfg.at("bins").get<int>();
        res.config.redundancy_floor = cfg.at("redundancy_floor").get<double>();
        return res;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad ranking JSON: " + e.what());
    }
}

}  // namespace lcmon
