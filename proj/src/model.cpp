/*
 * Copyright 2026 The ghm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ghm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ghm/error.hpp"
#include "ghm/random.hpp"

namespace ghm {

namespace {

constexpr double kSumTolerance = 1e-9;

void check_distribution(std::span<const double> p, const std::string& what) {
    double total = 0.0;
    for (double x : p) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw Error("InvalidModel", what + " has a non-positive entry");
        }
        total += x;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw Error("InvalidModel", what + " sums to " + std::to_string(total));
    }
}

}  // namespace

std::string_view init_mode_name(InitMode mode) {
    return mode == InitMode::pooled ? "pooled" : "flat-leaves";
}

InitMode parse_init_mode(std::string_view name) {
    for (auto mode : {InitMode::flat_leaves, InitMode::pooled}) {
        if (init_mode_name(mode) == name) {
            return mode;
        }
    }
    throw Error("InvalidConfig", "unknown init mode '" + std::string(name) + "'");
}

void EmConfig::validate() const {
    if (max_iterations < 1) {
        throw Error("InvalidConfig", "max_iterations must be at least 1");
    }
    if (!(tolerance > 0.0)) {
        throw Error("InvalidConfig", "tolerance must be positive");
    }
    if (!(alpha_smooth > 0.0) || !(beta_smooth > 0.0)) {
        throw Error("InvalidConfig", "smoothing pseudo-counts must be positive");
    }
}

nlohmann::json em_config_to_json(const EmConfig& cfg) {
    return {{"max_iterations", cfg.max_iterations},
            {"tolerance", cfg.tolerance},
            {"alpha_smooth", cfg.alpha_smooth},
            {"beta_smooth", cfg.beta_smooth},
            {"init", init_mode_name(cfg.init)},
            {"seed", cfg.seed}};
}

EmConfig em_config_from_json(const nlohmann::json& doc) {
    EmConfig cfg;
    cfg.max_iterations = doc.value("max_iterations", cfg.max_iterations);
    cfg.tolerance = doc.value("tolerance", cfg.tolerance);
    cfg.alpha_smooth = doc.value("alpha_smooth", cfg.alpha_smooth);
    cfg.beta_smooth = doc.value("beta_smooth", cfg.beta_smooth);
    cfg.init = parse_init_mode(doc.value("init", std::string(init_mode_name(cfg.init))));
    cfg.seed = doc.value("seed", cfg.seed);
    return cfg;
}

// ---------------------------------------------------------------------------
// GhmModel

GhmModel::GhmModel(GeoTree tree, Vocabulary vocab, std::vector<std::vector<double>> theta,
                   std::vector<std::vector<double>> pi, EmConfig config, TrainingInfo info)
    : tree_(std::move(tree)),
      vocab_(std::move(vocab)),
      pi_(std::move(pi)),
      config_(config),
      info_(std::move(info)) {
    const std::size_t T = vocab_.size();
    if (T == 0) {
        throw Error("InvalidModel", "empty vocabulary");
    }
    if (theta.size() != tree_.size() || pi_.size() != tree_.size()) {
        throw Error("InvalidModel", "parameter arrays do not match the tree size");
    }
    theta_.reserve(tree_.size() * T);
    for (NodeIndex v = 0; v < tree_.size(); ++v) {
        if (theta[v].size() != T) {
            throw Error("InvalidModel", "theta of '" + tree_.id(v) + "' has the wrong length");
        }
        check_distribution(theta[v], "theta of '" + tree_.id(v) + "'");
        theta_.insert(theta_.end(), theta[v].begin(), theta[v].end());
        if (tree_.is_leaf(v)) {
            if (pi_[v].size() != tree_.path(v).size()) {
                throw Error("InvalidModel", "pi of '" + tree_.id(v) + "' does not match its path");
            }
            check_distribution(pi_[v], "pi of '" + tree_.id(v) + "'");
        } else if (!pi_[v].empty()) {
            throw Error("InvalidModel", "internal node '" + tree_.id(v) + "' has mixture weights");
        }
    }
}

void GhmModel::check_leaf(NodeIndex leaf) const {
    if (leaf >= tree_.size() || !tree_.is_leaf(leaf)) {
        throw Error("UnknownLeaf", "node index " + std::to_string(leaf) + " is not a leaf");
    }
}

void GhmModel::check_tag(TagIndex t) const {
    if (t >= vocab_.size()) {
        throw Error("UnknownTag", "tag index " + std::to_string(t) + " out of range");
    }
}

std::span<const double> GhmModel::theta(NodeIndex node) const {
    if (node >= tree_.size()) {
        throw Error("UnknownNode", "node index " + std::to_string(node) + " out of range");
    }
    return std::span<const double>(theta_).subspan(node * vocab_.size(), vocab_.size());
}

std::span<const double> GhmModel::pi(NodeIndex leaf) const {
    check_leaf(leaf);
    return pi_[leaf];
}

double GhmModel::tag_probability(TagIndex t, NodeIndex leaf) const {
    check_leaf(leaf);
    check_tag(t);
    const auto path = tree_.path(leaf);
    const auto& weights = pi_[leaf];
    const std::size_t T = vocab_.size();
    double p = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        p += theta_[path[k] * T + t] * weights[k];
    }
    return p;
}

LevelPosterior GhmModel::posterior(TagIndex t, NodeIndex leaf) const {
    check_leaf(leaf);
    check_tag(t);
    const auto path = tree_.path(leaf);
    const auto& weights = pi_[leaf];
    const std::size_t T = vocab_.size();
    LevelPosterior out{{path.begin(), path.end()}, std::vector<double>(path.size())};
    double total = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        out.probabilities[k] = theta_[path[k] * T + t] * weights[k];
        total += out.probabilities[k];
    }
    for (auto& p : out.probabilities) {
        p /= total;
    }
    return out;
}

NodeIndex GhmModel::classify(TagIndex t, NodeIndex leaf) const {
    check_leaf(leaf);
    check_tag(t);
    // The normalizer is shared, so comparing unnormalized joint terms gives
    // the posterior argmax. Path order is leaf first: strict '>' keeps the
    // deepest node on ties.
    const auto path = tree_.path(leaf);
    const auto& weights = pi_[leaf];
    const std::size_t T = vocab_.size();
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const double score = theta_[path[k] * T + t] * weights[k];
        if (score > best_score) {
            best_score = score;
            best = k;
        }
    }
    return path[best];
}

std::vector<RankedTag> GhmModel::top_tags(NodeIndex leaf, std::size_t k) const {
    check_leaf(leaf);
    if (k == 0) {
        throw Error("InvalidArgument", "k must be at least 1");
    }
    const std::size_t T = vocab_.size();
    std::vector<double> prob(T);
    for (TagIndex t = 0; t < T; ++t) {
        prob[t] = tag_probability(t, leaf);
    }
    std::vector<TagIndex> order(T);
    std::iota(order.begin(), order.end(), TagIndex{0});
    k = std::min(k, T);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](TagIndex a, TagIndex b) {
                          return prob[a] != prob[b] ? prob[a] > prob[b] : a < b;
                      });
    std::vector<RankedTag> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({order[i], prob[order[i]], classify(order[i], leaf)});
    }
    return out;
}

double GhmModel::uniqueness(NodeIndex leaf) const {
    check_leaf(leaf);
    return pi_[leaf].front();
}

double GhmModel::similarity(NodeIndex a, NodeIndex b) const {
    check_leaf(a);
    check_leaf(b);
    const auto x = theta(a);
    const auto y = theta(b);
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        dot += x[t] * y[t];
        nx += x[t] * x[t];
        ny += y[t] * y[t];
    }
    return std::clamp(dot / std::sqrt(nx * ny), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct EmState {
    const GeoTree& tree;
    const CountMatrix& counts;
    std::vector<std::size_t> rows;  // tree leaf position -> count row
    std::size_t T;
    std::vector<double> theta;      // node-major
    std::vector<std::vector<double>> pi;  // by node index, path order
    std::vector<double> acc_theta;
    std::vector<std::vector<double>> acc_pi;

    /// E-step: log-likelihood of the current parameters; fills accumulators.
    double expectation() {
        std::fill(acc_theta.begin(), acc_theta.end(), 0.0);
        double ll = 0.0;
        double joint[64];
        for (std::size_t i = 0; i < tree.leaves().size(); ++i) {
            const NodeIndex leaf = tree.leaves()[i];
            const auto path = tree.path(leaf);
            const auto& weights = pi[leaf];
            auto& acc = acc_pi[leaf];
            std::fill(acc.begin(), acc.end(), 0.0);
            for (const auto& e : counts.row(rows[i])) {
                double total = 0.0;
                for (std::size_t k = 0; k < path.size(); ++k) {
                    joint[k] = theta[path[k] * T + e.tag] * weights[k];
                    total += joint[k];
                }
                const double x = static_cast<double>(e.count);
                ll += x * std::log(total);
                const double scale = x / total;
                for (std::size_t k = 0; k < path.size(); ++k) {
                    const double r = joint[k] * scale;
                    acc_theta[path[k] * T + e.tag] += r;
                    acc[k] += r;
                }
            }
        }
        return ll;
    }

    void maximization(double alpha, double beta) {
        for (NodeIndex v = 0; v < tree.size(); ++v) {
            const auto begin = acc_theta.begin() + static_cast<std::ptrdiff_t>(v * T);
            const double mass = std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(T), 0.0);
            const double denom = mass + static_cast<double>(T) * alpha;
            for (std::size_t t = 0; t < T; ++t) {
                theta[v * T + t] = (acc_theta[v * T + t] + alpha) / denom;
            }
        }
        for (std::size_t i = 0; i < tree.leaves().size(); ++i) {
            const NodeIndex leaf = tree.leaves()[i];
            auto& weights = pi[leaf];
            const auto& acc = acc_pi[leaf];
            const double denom = static_cast<double>(counts.row_total(rows[i])) +
                                 static_cast<double>(weights.size()) * beta;
            for (std::size_t k = 0; k < weights.size(); ++k) {
                weights[k] = (acc[k] + beta) / denom;
            }
        }
    }

    /// Log of the Dirichlet pseudo-count prior, up to a constant.
    double log_prior(double alpha, double beta) const {
        double lp = 0.0;
        for (double p : theta) {
            lp += std::log(p);
        }
        lp *= alpha;
        double lq = 0.0;
        for (const auto& weights : pi) {
            for (double w : weights) {
                lq += std::log(w);
            }
        }
        return lp + beta * lq;
    }
};

}  // namespace

GhmModel train(const CountMatrix& counts, const GeoTree& tree, const EmConfig& cfg) {
    return train(counts, tree, Vocabulary::numbered(counts.vocab_size()), cfg);
}

GhmModel train(const CountMatrix& counts, const GeoTree& tree, const Vocabulary& vocab,
               const EmConfig& cfg) {
    cfg.validate();
    const std::size_t T = counts.vocab_size();
    if (T == 0 || counts.total() == 0) {
        throw Error("EmptyCounts", "training needs at least one observed tag");
    }
    if (vocab.size() != T) {
        throw Error("VocabularyMismatch", "vocabulary size differs from the count matrix");
    }
    auto rows = align_rows(counts, tree);
    for (auto leaf : tree.leaves()) {
        if (tree.path(leaf).size() > 64) {
            throw Error("InvalidConfig", "paths deeper than 64 nodes are not supported");
        }
    }

    EmState em{tree, counts, std::move(rows), T, {}, {}, {}, {}};
    em.theta.assign(tree.size() * T, 0.0);
    em.acc_theta.assign(tree.size() * T, 0.0);
    em.pi.assign(tree.size(), {});
    em.acc_pi.assign(tree.size(), {});

    // Initial theta: internal nodes start from the pooled counts of their
    // descendant leaves; leaves do too under InitMode::pooled, and start flat
    // otherwise. Smoothed, then jittered by a factor in [0.99, 1.01].
    for (std::size_t i = 0; i < tree.leaves().size(); ++i) {
        const NodeIndex leaf = tree.leaves()[i];
        const auto path = tree.path(leaf);
        const std::size_t first = cfg.init == InitMode::pooled ? 0 : 1;
        for (const auto& e : counts.row(em.rows[i])) {
            for (std::size_t k = first; k < path.size(); ++k) {
                em.acc_theta[path[k] * T + e.tag] += static_cast<double>(e.count);
            }
        }
        em.pi[leaf].assign(path.size(), 1.0 / static_cast<double>(path.size()));
        em.acc_pi[leaf].assign(path.size(), 0.0);
    }
    Rng rng(cfg.seed);
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        double* row = em.theta.data() + v * T;
        const double* pooled = em.acc_theta.data() + v * T;
        const double mass = std::accumulate(pooled, pooled + T, 0.0);
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double jitter = 1.0 + rng.uniform(-0.01, 0.01);
            row[t] = (pooled[t] + cfg.alpha_smooth) / (mass + static_cast<double>(T) * cfg.alpha_smooth) * jitter;
            total += row[t];
        }
        for (std::size_t t = 0; t < T; ++t) {
            row[t] /= total;
        }
    }

    TrainingInfo info;
    auto record = [&](double ll) {
        if (!std::isfinite(ll)) {
            throw NumericalError("NonFiniteLikelihood", "log-likelihood became non-finite");
        }
        info.trace.push_back(ll);
        info.objective_trace.push_back(ll + em.log_prior(cfg.alpha_smooth, cfg.beta_smooth));
    };

    double previous = em.expectation();
    record(previous);
    for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
        em.maximization(cfg.alpha_smooth, cfg.beta_smooth);
        const double current = em.expectation();
        record(current);
        info.iterations = it;
        const double scale = std::max(std::abs(previous), 1e-300);
        if ((current - previous) / scale < cfg.tolerance) {
            info.converged = true;
            break;
        }
        previous = current;
    }
    info.log_likelihood = info.trace.back();

    std::vector<std::vector<double>> theta(tree.size());
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        theta[v].assign(em.theta.begin() + static_cast<std::ptrdiff_t>(v * T),
                        em.theta.begin() + static_cast<std::ptrdiff_t>((v + 1) * T));
    }
    return GhmModel(tree, vocab, std::move(theta), std::move(em.pi), cfg, std::move(info));
}

double log_likelihood(const GhmModel& model, const CountMatrix& counts) {
    if (counts.vocab_size() > model.vocab_size()) {
        throw Error("VocabularyMismatch", "count matrix uses tags the model does not know");
    }
    const auto& tree = model.tree();
    const auto rows = align_rows(counts, tree);
    double ll = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const NodeIndex leaf = tree.leaves()[i];
        for (const auto& e : counts.row(rows[i])) {
            ll += static_cast<double>(e.count) * std::log(model.tag_probability(e.tag, leaf));
        }
    }
    return ll;
}

std::vector<TagIndex> common_tags(const GhmModel& model, NodeIndex a, NodeIndex b, std::size_t count) {
    model.check_leaf(a);
    model.check_leaf(b);
    const auto x = model.theta(a);
    const auto y = model.theta(b);
    std::vector<TagIndex> order(model.vocab_size());
    std::iota(order.begin(), order.end(), TagIndex{0});
    const std::size_t c = std::min(count, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(c), order.end(),
                      [&](TagIndex s, TagIndex t) {
                          const double ps = x[s] * y[s];
                          const double pt = x[t] * y[t];
                          return ps != pt ? ps > pt : s < t;
                      });
    order.resize(c);
    return order;
}

std::vector<RegionMapping> map_regions(const GhmModel& model, std::span<const NodeIndex> from,
                                       std::span<const NodeIndex> to, std::size_t k,
                                       std::size_t common) {
    if (from.empty() || to.empty()) {
        throw Error("EmptyLeafSet", "both leaf sets must be non-empty");
    }
    if (k == 0) {
        throw Error("InvalidArgument", "k must be at least 1");
    }
    std::unordered_set<NodeIndex> from_set;
    for (auto n : from) {
        model.check_leaf(n);
        from_set.insert(n);
    }
    for (auto n : to) {
        model.check_leaf(n);
        if (from_set.count(n)) {
            throw Error("OverlappingLeafSets", "leaf '" + model.tree().id(n) + "' is in both sets");
        }
    }

    std::vector<RegionMapping> out;
    for (auto n : from) {
        std::vector<RegionMatch> matches;
        for (auto m : to) {
            matches.push_back({m, model.similarity(n, m), {}});
        }
        std::stable_sort(matches.begin(), matches.end(), [](const RegionMatch& a, const RegionMatch& b) {
            return a.similarity > b.similarity;
        });
        matches.resize(std::min(k, matches.size()));
        for (auto& match : matches) {
            match.common_tags = common_tags(model, n, match.leaf, common);
        }
        out.push_back({n, std::move(matches)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

/// Dense vector as {floor, entries}: entries hold every value differing from
/// the floor (the smallest value), which is exact and sparse after training.
nlohmann::json sparse_distribution(std::span<const double> p) {
    const double floor = *std::min_element(p.begin(), p.end());
    auto entries = nlohmann::json::array();
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (p[t] != floor) {
            entries.push_back({t, p[t]});
        }
    }
    return {{"floor", floor}, {"entries", std::move(entries)}};
}

std::vector<double> dense_distribution(const nlohmann::json& doc, std::size_t size) {
    std::vector<double> out(size, doc.at("floor").get<double>());
    for (const auto& e : doc.at("entries")) {
        const auto t = e.at(0).get<std::size_t>();
        if (t >= size) {
            throw Error("InvalidModelFile", "sparse entry index out of range");
        }
        out[t] = e.at(1).get<double>();
    }
    return out;
}

}  // namespace

nlohmann::json model_to_json(const GhmModel& model) {
    const auto& tree = model.tree();
    auto theta = nlohmann::json::array();
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        auto node = sparse_distribution(model.theta(v));
        node["node"] = tree.id(v);
        theta.push_back(std::move(node));
    }
    auto pi = nlohmann::json::array();
    for (auto leaf : tree.leaves()) {
        pi.push_back({{"leaf", tree.id(leaf)},
                      {"weights", std::vector<double>(model.pi(leaf).begin(), model.pi(leaf).end())}});
    }
    const auto& info = model.training();
    return {{"version", "ghm-model/1"},
            {"tree", tree_to_json(tree)},
            {"vocabulary", std::vector<std::string>(model.vocabulary().terms().begin(),
                                                    model.vocabulary().terms().end())},
            {"theta", std::move(theta)},
            {"pi", std::move(pi)},
            {"config", em_config_to_json(model.config())},
            {"training",
             {{"iterations", info.iterations},
              {"converged", info.converged},
              {"log_likelihood", info.log_likelihood},
              {"trace", info.trace},
              {"objective_trace", info.objective_trace}}}};
}

GhmModel model_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("version", "") != "ghm-model/1") {
        throw Error("InvalidModelFile", "expected a \"ghm-model/1\" document");
    }
    try {
        auto tree = tree_from_json(doc.at("tree"));
        Vocabulary vocab(doc.at("vocabulary").get<std::vector<std::string>>());
        std::vector<std::vector<double>> theta(tree.size());
        for (const auto& node : doc.at("theta")) {
            theta.at(tree.index_of(node.at("node").get<std::string>())) = dense_distribution(node, vocab.size());
        }
        std::vector<std::vector<double>> pi(tree.size());
        for (const auto& leaf : doc.at("pi")) {
            pi.at(tree.index_of(leaf.at("leaf").get<std::string>())) =
                leaf.at("weights").get<std::vector<double>>();
        }
        TrainingInfo info;
        if (doc.contains("training")) {
            const auto& t = doc["training"];
            info.iterations = t.value("iterations", std::size_t{0});
            info.converged = t.value("converged", false);
            info.log_likelihood = t.value("log_likelihood", 0.0);
            info.trace = t.value("trace", std::vector<double>{});
            info.objective_trace = t.value("objective_trace", std::vector<double>{});
        }
        return GhmModel(std::move(tree), std::move(vocab), std::move(theta), std::move(pi),
                        em_config_from_json(doc.value("config", nlohmann::json::object())),
                        std::move(info));
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidModelFile", e.what());
    }
}

}  // namespace ghm
