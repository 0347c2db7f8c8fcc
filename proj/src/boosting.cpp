#include "lcmon/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "lcmon/errors.hpp"
#include "lcmon/rng.hpp"

namespace lcmon {

namespace {

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

constexpr double kProbClamp = 1e-15;

}  // namespace

std::string_view to_string(Objective o) {
    return o == Objective::logistic ? "logistic" : "squared";
}

Objective objective_from_string(std::string_view s) {
    if (s == "logistic") return Objective::logistic;
    if (s == "squared") return Objective::squared;
    throw InvalidArgument("unknown objective '" + std::string(s) + "'");
}

void validate(const Hyperparameters& hp) {
    if (hp.n_estimators < 1) throw InvalidArgument("hp: n_estimators must be >= 1");
    if (hp.max_depth < 0) throw InvalidArgument("hp: max_depth must be >= 0");
    if (!(hp.learning_rate > 0.0) || hp.learning_rate > 1.0)
        throw InvalidArgument("hp: learning_rate must be in (0, 1]");
    if (!(hp.subsample > 0.0) || hp.subsample > 1.0)
        throw InvalidArgument("hp: subsample must be in (0, 1]");
    if (!(hp.colsample_bytree > 0.0) || hp.colsample_bytree > 1.0)
        throw InvalidArgument("hp: colsample_bytree must be in (0, 1]");
    if (hp.lambda < 0.0) throw InvalidArgument("hp: lambda must be >= 0");
    if (hp.gamma < 0.0) throw InvalidArgument("hp: gamma must be >= 0");
    if (hp.alpha < 0.0) throw InvalidArgument("hp: alpha must be >= 0");
    if (hp.min_child_hessian < 0.0)
        throw InvalidArgument("hp: min_child_hessian must be >= 0");
}

Hyperparameters preset(std::string_view name) {
    Hyperparameters hp;
    if (name == "tuned-classifier") {
        hp.n_estimators = 422;
        hp.max_depth = 4;
        hp.learning_rate = 0.157;
        hp.subsample = 0.837;
        hp.colsample_bytree = 0.603;
        hp.objective = Objective::logistic;
        return hp;
    }
    if (name == "tuned-wet") {
        hp.n_estimators = 732;
        hp.max_depth = 7;
        hp.learning_rate = 0.008;
        hp.subsample = 0.5;
        hp.colsample_bytree = 1.0;
        hp.objective = Objective::squared;
        return hp;
    }
    if (name == "tuned-dry") {
        hp.n_estimators = 810;
        hp.max_depth = 7;
        hp.learning_rate = 0.016;
        hp.subsample = 0.5;
        hp.colsample_bytree = 1.0;
        hp.objective = Objective::squared;
        return hp;
    }
    throw InvalidArgument("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
    return {"tuned-classifier", "tuned-wet", "tuned-dry"};
}

double Tree::value_for(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const TreeNode& node = nodes[static_cast<std::size_t>(i)];
        const double v = x[static_cast<std::size_t>(node.feature)];
        if (std::isnan(v)) {
            i = node.default_left ? node.left : node.right;
        } else {
            i = v < node.threshold ? node.left : node.right;
        }
    }
    return nodes[static_cast<std::size_t>(i)].weight;
}

void gradients(Objective objective, std::span<const double> y,
               std::span<const double> raw, std::vector<double>& g,
               std::vector<double>& h) {
    if (y.size() != raw.size()) throw InvalidArgument("gradients: length mismatch");
    g.resize(y.size());
    h.resize(y.size());
    switch (objective) {
        case Objective::squared:
            for (std::size_t i = 0; i < y.size(); ++i) {
                g[i] = raw[i] - y[i];
                h[i] = 1.0;
            }
            break;
        case Objective::logistic:
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double p = sigmoid(raw[i]);
                g[i] = p - y[i];
                h[i] = p * (1.0 - p);
            }
            break;
    }
}

double data_loss(Objective objective, std::span<const double> y,
                 std::span<const double> raw) {
    if (y.size() != raw.size()) throw InvalidArgument("data_loss: length mismatch");
    double loss = 0.0;
    switch (objective) {
        case Objective::squared:
            for (std::size_t i = 0; i < y.size(); ++i)
                loss += 0.5 * (raw[i] - y[i]) * (raw[i] - y[i]);
            break;
        case Objective::logistic:
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double p = std::clamp(sigmoid(raw[i]), kProbClamp, 1.0 - kProbClamp);
                loss += -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
            }
            break;
    }
    return loss;
}

double leaf_weight(double grad_sum, double hess_sum, const Hyperparameters& hp) {
    const double denom = hess_sum + hp.lambda;
    if (denom <= 0.0) return 0.0;
    double numer = -grad_sum;
    if (hp.alpha > 0.0) {
        const double mag = std::max(std::abs(grad_sum) - hp.alpha, 0.0);
        numer = grad_sum > 0.0 ? -mag : mag;
    }
    return hp.learning_rate * numer / denom;
}

namespace {

struct TreeBuilder {
    const FeatureMatrix& X;
    const std::vector<double>& g;
    const std::vector<double>& h;
    const Hyperparameters& hp;
    const std::vector<std::size_t>& features;  // candidate columns, ascending
    Tree tree;

    struct BestSplit {
        double gain = 0.0;  // splits must beat zero
        std::size_t feature = 0;
        double threshold = 0.0;
        bool found = false;
    };

    // Exact greedy enumeration: thresholds are midpoints between consecutive
    // distinct values observed at this node.
    BestSplit find_split(const std::vector<std::size_t>& rows, double grad_sum,
                         double hess_sum) const {
        BestSplit best;
        std::vector<std::pair<double, std::size_t>> vals(rows.size());
        const double parent_term =
            grad_sum * grad_sum / (hess_sum + hp.lambda);
        for (std::size_t f : features) {
            const auto& col = X.columns[f];
            for (std::size_t r = 0; r < rows.size(); ++r)
                vals[r] = {col[rows[r]], rows[r]};
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double gl = 0.0, hl = 0.0;
            for (std::size_t r = 0; r + 1 < vals.size(); ++r) {
                gl += g[vals[r].second];
                hl += h[vals[r].second];
                if (vals[r].first == vals[r + 1].first) continue;
                const double gr = grad_sum - gl;
                const double hr = hess_sum - hl;
                if (hl < hp.min_child_hessian || hr < hp.min_child_hessian) continue;
                const double thr =
                    vals[r].first + 0.5 * (vals[r + 1].first - vals[r].first);
                // Guard against midpoints that collapse onto the lower value
                // when adjacent floats are involved; such a threshold would
                // not reproduce the evaluated partition.
                if (!(vals[r].first < thr)) continue;
                const double gain =
                    0.5 * (gl * gl / (hl + hp.lambda) + gr * gr / (hr + hp.lambda) -
                           parent_term) -
                    hp.gamma;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = thr;
                    best.found = true;
                }
            }
        }
        return best;
    }

    int build(const std::vector<std::size_t>& rows, int depth) {
        double grad_sum = 0.0, hess_sum = 0.0;
        for (std::size_t r : rows) {
            grad_sum += g[r];
            hess_sum += h[r];
        }

        BestSplit split;
        if (depth < hp.max_depth && rows.size() >= 2)
            split = find_split(rows, grad_sum, hess_sum);

        const int index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (!split.found) {
            tree.nodes[static_cast<std::size_t>(index)].weight =
                leaf_weight(grad_sum, hess_sum, hp);
            return index;
        }

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        const auto& col = X.columns[split.feature];
        for (std::size_t r : rows)
            (col[r] < split.threshold ? left_rows : right_rows).push_back(r);

        const int left = build(left_rows, depth + 1);
        const int right = build(right_rows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<int>(split.feature);
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return index;
    }
};

double tree_penalty(const Tree& t, const Hyperparameters& hp) {
    double leaves = 0.0, wsq = 0.0;
    for (const auto& n : t.nodes)
        if (n.is_leaf()) {
            leaves += 1.0;
            wsq += n.weight * n.weight;
        }
    return hp.gamma * leaves + 0.5 * hp.lambda * wsq;
}

}  // namespace

BoostedModel train(const FeatureMatrix& X, std::span<const double> y,
                   const Hyperparameters& hp, TrainLog* log) {
    validate(hp);
    const std::size_t n = X.n_rows();
    const std::size_t nf = X.n_cols();
    if (n == 0 || nf == 0) throw InvalidArgument("train: empty training data");
    if (y.size() != n) throw InvalidArgument("train: X rows and y length differ");
    if (n < 2) throw InvalidArgument("train: need >= 2 samples");
    for (const auto& col : X.columns)
        for (double v : col)
            if (!std::isfinite(v)) throw InvalidArgument("train: non-finite value in X");
    for (double v : y)
        if (!std::isfinite(v)) throw InvalidArgument("train: non-finite value in y");

    BoostedModel model;
    model.objective = hp.objective;
    model.hp = hp;
    model.selected_feature_ids = X.feature_ids;
    model.catalog_version = X.catalog_version;

    if (hp.objective == Objective::logistic) {
        std::size_t pos = 0;
        for (double v : y) {
            if (v != 0.0 && v != 1.0)
                throw InvalidArgument("train: logistic targets must be 0 or 1");
            if (v == 1.0) ++pos;
        }
        if (pos == 0 || pos == n)
            throw DegenerateTarget("train: all logistic targets in one class");
        model.base_score =
            std::log(static_cast<double>(pos) / static_cast<double>(n - pos));
    } else {
        double sum = 0.0;
        for (double v : y) sum += v;
        model.base_score = sum / static_cast<double>(n);
    }
    if (hp.base_score) model.base_score = *hp.base_score;

    std::vector<double> raw(n, model.base_score);
    std::vector<double> g, h;
    Rng rng(hp.seed);

    std::vector<std::size_t> all_rows(n), all_features(nf);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::iota(all_features.begin(), all_features.end(), 0);
    const auto n_sub = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(hp.subsample * static_cast<double>(n))));
    const auto f_sub = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(hp.colsample_bytree * static_cast<double>(nf))));

    double penalty_total = 0.0;
    for (int round = 0; round < hp.n_estimators; ++round) {
        gradients(hp.objective, y, raw, g, h);

        // Fractions of exactly 1 draw nothing from the generator, so full-
        // batch runs are reproducible independently of sampling code.
        std::vector<std::size_t> rows;
        if (hp.subsample < 1.0) {
            rows = rng.sample_indices(n, n_sub);
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows;
        }
        std::vector<std::size_t> feats;
        if (hp.colsample_bytree < 1.0) {
            feats = rng.sample_indices(nf, f_sub);
            std::sort(feats.begin(), feats.end());
        } else {
            feats = all_features;
        }

        TreeBuilder builder{X, g, h, hp, feats, {}};
        builder.build(rows, 0);
        model.trees.push_back(std::move(builder.tree));

        const Tree& t = model.trees.back();
        std::vector<double> scratch;
        for (std::size_t i = 0; i < n; ++i) {
            X.row_into(i, scratch);
            raw[i] += t.value_for(scratch);
        }
        if (log) {
            penalty_total += tree_penalty(t, hp);
            log->data_loss.push_back(data_loss(hp.objective, y, raw));
            log->objective.push_back(log->data_loss.back() + penalty_total);
        }
    }
    return model;
}

double predict_raw(const BoostedModel& m, std::span<const double> x) {
    if (x.size() != m.selected_feature_ids.size())
        throw IncompatibleInput("predict: input width does not match model features");
    double s = m.base_score;
    for (const auto& t : m.trees) s += t.value_for(x);
    return s;
}

double predict(const BoostedModel& m, std::span<const double> x) {
    const double s = predict_raw(m, x);
    return m.objective == Objective::logistic ? sigmoid(s) : s;
}

double predict_vector(const BoostedModel& m, const FeatureVector& v,
                      const FeatureCatalog& catalog) {
    if (v.catalog_version != m.catalog_version)
        throw IncompatibleInput("predict: catalog version '" + v.catalog_version +
                                "' does not match model '" + m.catalog_version + "'");
    if (v.values.size() != catalog.size())
        throw IncompatibleInput("predict: vector does not match catalog size");
    std::vector<double> x(m.selected_feature_ids.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::size_t idx;
        try {
            idx = catalog.index_of(m.selected_feature_ids[j]);
        } catch (const InvalidArgument&) {
            throw IncompatibleInput("predict: catalog lacks feature '" +
                                    m.selected_feature_ids[j] + "'");
        }
        x[j] = v.values[idx];
    }
    return predict(m, x);
}

std::vector<double> predict_matrix(const BoostedModel& m, const FeatureMatrix& X) {
    if (X.feature_ids != m.selected_feature_ids)
        throw IncompatibleInput("predict: matrix columns do not match model features");
    std::vector<double> out(X.n_rows());
    std::vector<double> scratch;
    for (std::size_t i = 0; i < out.size(); ++i) {
        X.row_into(i, scratch);
        out[i] = predict(m, scratch);
    }
    return out;
}

namespace {

nlohmann::json node_to_json(const Tree& t, int index) {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(index)];
    if (n.is_leaf()) return {{"weight", n.weight}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_to_json(t, n.left)},
            {"right", node_to_json(t, n.right)}};
}

int node_from_json(const nlohmann::json& j, Tree& t) {
    const int index = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    if (j.contains("weight")) {
        t.nodes[static_cast<std::size_t>(index)].weight = j.at("weight").get<double>();
        return index;
    }
    const int feature = j.at("feature").get<int>();
    const double threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), t);
    const int right = node_from_json(j.at("right"), t);
    TreeNode& n = t.nodes[static_cast<std::size_t>(index)];
    n.feature = feature;
    n.threshold = threshold;
    n.left = left;
    n.right = right;
    return index;
}

}  // namespace

std::string model_to_json_string(const BoostedModel& m) {
    nlohmann::json hp{
        {"n_estimators", m.hp.n_estimators},
        {"max_depth", m.hp.max_depth},
        {"learning_rate", m.hp.learning_rate},
        {"subsample", m.hp.subsample},
        {"colsample_bytree", m.hp.colsample_bytree},
        {"lambda", m.hp.lambda},
        {"gamma", m.hp.gamma},
        {"alpha", m.hp.alpha},
        {"min_child_hessian", m.hp.min_child_hessian},
        {"objective", std::string(to_string(m.hp.objective))},
        {"seed", m.hp.seed},
    };
    if (m.hp.base_score) hp["base_score"] = *m.hp.base_score;

    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.trees) trees.push_back(node_to_json(t, 0));

    nlohmann::json metrics = nlohmann::json::object();
    if (m.metrics.validation_rmse_pct)
        metrics["validation_rmse_pct"] = *m.metrics.validation_rmse_pct;
    if (m.metrics.validation_f1) metrics["validation_f1"] = *m.metrics.validation_f1;

    nlohmann::json doc{
        {"format_version", 1},
        {"objective", std::string(to_string(m.objective))},
        {"base_score", m.base_score},
        {"hyperparameters", hp},
        {"selected_feature_ids", m.selected_feature_ids},
        {"catalog_version", m.catalog_version},
        {"metrics", metrics},
        {"trees", trees},
    };
    return doc.dump(2) + "\n";
}

void save_model(const BoostedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write model file: " + path);
    out << model_to_json_string(m);
    if (!out) throw IoError("write failed: " + path);
}

namespace {

// Absent keys keep the defaults, so partial hyperparameter files are valid.
Hyperparameters hp_from_json(const nlohmann::json& hp) {
    Hyperparameters out;
    if (hp.contains("n_estimators")) out.n_estimators = hp.at("n_estimators").get<int>();
    if (hp.contains("max_depth")) out.max_depth = hp.at("max_depth").get<int>();
    if (hp.contains("learning_rate"))
        out.learning_rate = hp.at("learning_rate").get<double>();
    if (hp.contains("subsample")) out.subsample = hp.at("subsample").get<double>();
    if (hp.contains("colsample_bytree"))
        out.colsample_bytree = hp.at("colsample_bytree").get<double>();
    if (hp.contains("lambda")) out.lambda = hp.at("lambda").get<double>();
    if (hp.contains("gamma")) out.gamma = hp.at("gamma").get<double>();
    if (hp.contains("alpha")) out.alpha = hp.at("alpha").get<double>();
    if (hp.contains("min_child_hessian"))
        out.min_child_hessian = hp.at("min_child_hessian").get<double>();
    if (hp.contains("objective"))
        out.objective = objective_from_string(hp.at("objective").get<std::string>());
    if (hp.contains("seed")) out.seed = hp.at("seed").get<std::uint64_t>();
    if (hp.contains("base_score")) out.base_score = hp.at("base_score").get<double>();
    return out;
}

}  // namespace

Hyperparameters load_hyperparameters_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hyperparameter file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
        return hp_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad hyperparameter JSON: " + e.what());
    }
}

BoostedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad model JSON: " + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw IoError(path + ": unsupported model format version");
        BoostedModel m;
        m.objective = objective_from_string(doc.at("objective").get<std::string>());
        m.base_score = doc.at("base_score").get<double>();
        m.hp = hp_from_json(doc.at("hyperparameters"));
        m.selected_feature_ids =
            doc.at("selected_feature_ids").get<std::vector<std::string>>();
        m.catalog_version = doc.at("catalog_version").get<std::string>();
        if (doc.contains("metrics")) {
            const auto& metrics = doc.at("metrics");
            if (metrics.contains("validation_rmse_pct"))
                m.metrics.validation_rmse_pct = metrics.at("validation_rmse_pct").get<double>();
            if (metrics.contains("validation_f1"))
                m.metrics.validation_f1 = metrics.at("validation_f1").get<double>();
        }
        for (const auto& tj : doc.at("trees")) {
            Tree t;
            node_from_json(tj, t);
            m.trees.push_back(std::move(t));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad model JSON: " + e.what());
    }
}

Hyperparameters random_search(const FeatureMatrix& X_train, std::span<const double> y_train,
                              const FeatureMatrix& X_valid, std::span<const double> y_valid,
                              Objective objective, const SearchSpace& space, int n_trials,
                              std::uint64_t seed) {
    if (n_trials < 1) throw InvalidArgument("random_search: n_trials must be >= 1");
    Rng rng(seed);
    Hyperparameters best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < n_trials; ++trial) {
        Hyperparameters hp;
        hp.objective = objective;
        hp.n_estimators = space.n_estimators_min +
                          static_cast<int>(rng.below(static_cast<std::size_t>(
                              space.n_estimators_max - space.n_estimators_min + 1)));
        hp.max_depth = space.max_depth_min +
                       static_cast<int>(rng.below(static_cast<std::size_t>(
                           space.max_depth_max - space.max_depth_min + 1)));
        hp.learning_rate = std::exp(rng.uniform(std::log(space.learning_rate_min),
                                                std::log(space.learning_rate_max)));
        hp.subsample = rng.uniform(space.subsample_min, space.subsample_max);
        hp.colsample_bytree = rng.uniform(space.colsample_min, space.colsample_max);
        hp.seed = Rng::derive(seed, static_cast<std::uint64_t>(trial));

        const BoostedModel m = train(X_train, y_train, hp);
        std::vector<double> raw(X_valid.n_rows());
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = predict_raw(m, X_valid.row(i));
        const double loss = data_loss(objective, y_valid, raw);
        if (loss < best_loss) {
            best_loss = loss;
            best = hp;
        }
    }
    return best;
}

}  // namespace lcmon
