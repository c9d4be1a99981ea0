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

#include "ghm/baselines.hpp"

#include <cmath>

#include "ghm/error.hpp"

namespace ghm {

namespace {

void check_query(const GeoTree& tree, std::size_t T, TagIndex t, NodeIndex leaf) {
    if (leaf >= tree.size() || !tree.is_leaf(leaf)) {
        throw Error("UnknownLeaf", "node index " + std::to_string(leaf) + " is not a leaf");
    }
    if (t >= T) {
        throw Error("UnknownTag", "tag index " + std::to_string(t) + " out of range");
    }
}

/// Per-node pooled counts (node-major, T per node).
std::vector<std::uint64_t> pool_counts(const CountMatrix& counts, const GeoTree& tree) {
    const auto rows = align_rows(counts, tree);
    const std::size_t T = counts.vocab_size();
    std::vector<std::uint64_t> pooled(tree.size() * T, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto path = tree.path(tree.leaves()[i]);
        for (const auto& e : counts.row(rows[i])) {
            for (auto v : path) {
                pooled[v * T + e.tag] += e.count;
            }
        }
    }
    return pooled;
}

}  // namespace

NbModel::NbModel(GeoTree tree, std::size_t vocab_size, double smoothing,
                 std::vector<std::uint64_t> node_counts)
    : tree_(std::move(tree)), T_(vocab_size), smoothing_(smoothing), counts_(std::move(node_counts)) {
    if (!(smoothing_ > 0.0)) {
        throw Error("InvalidConfig", "NB smoothing must be positive");
    }
    if (counts_.size() != tree_.size() * T_) {
        throw Error("InvalidModel", "NB count table does not match tree and vocabulary");
    }
    totals_.assign(tree_.size(), 0);
    for (NodeIndex v = 0; v < tree_.size(); ++v) {
        for (std::size_t t = 0; t < T_; ++t) {
            totals_[v] += counts_[v * T_ + t];
        }
    }
}

double NbModel::probability(NodeIndex v, TagIndex t) const {
    return (static_cast<double>(count(v, t)) + smoothing_) /
           (static_cast<double>(totals_.at(v)) + static_cast<double>(T_) * smoothing_);
}

NbModel nb_train(const CountMatrix& counts, const GeoTree& tree, double smoothing) {
    return NbModel(tree, counts.vocab_size(), smoothing, pool_counts(counts, tree));
}

NodeIndex nb_classify(const NbModel& model, TagIndex t, NodeIndex leaf) {
    check_query(model.tree(), model.vocab_size(), t, leaf);
    const auto path = model.tree().path(leaf);
    NodeIndex best = path.front();
    double best_p = -1.0;
    for (auto v : path) {
        const double p = model.probability(v, t);
        if (p > best_p) {
            best_p = p;
            best = v;
        }
    }
    return best;
}

HtModel::HtModel(GeoTree tree, std::size_t vocab_size, std::vector<double> weights)
    : tree_(std::move(tree)), T_(vocab_size), weights_(std::move(weights)) {
    if (weights_.size() != tree_.size() * T_) {
        throw Error("InvalidModel", "HT weight table does not match tree and vocabulary");
    }
}

std::span<const double> HtModel::weights(NodeIndex v) const {
    if (v >= tree_.size()) {
        throw Error("UnknownNode", "node index " + std::to_string(v) + " out of range");
    }
    return std::span<const double>(weights_).subspan(v * T_, T_);
}

HtModel ht_train(const CountMatrix& counts, const GeoTree& tree) {
    const std::size_t T = counts.vocab_size();
    const auto pooled = pool_counts(counts, tree);

    std::vector<std::size_t> nodes_at_depth(tree.depth(), 0);
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        ++nodes_at_depth[tree.node_depth(v)];
    }
    // df[d * T + t]: nodes at depth d whose pooled counts contain t.
    std::vector<std::size_t> df(tree.depth() * T, 0);
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        const std::size_t d = tree.node_depth(v);
        for (std::size_t t = 0; t < T; ++t) {
            if (pooled[v * T + t] > 0) {
                ++df[d * T + t];
            }
        }
    }

    std::vector<double> weights(tree.size() * T, 0.0);
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        const std::size_t d = tree.node_depth(v);
        const double L = static_cast<double>(nodes_at_depth[d]);
        std::uint64_t total = 0;
        for (std::size_t t = 0; t < T; ++t) {
            total += pooled[v * T + t];
        }
        if (total == 0) {
            continue;
        }
        double norm = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const auto c = pooled[v * T + t];
            if (c == 0) {
                continue;
            }
            const double tf = static_cast<double>(c) / static_cast<double>(total);
            const double idf = std::log((L + 1.0) / (static_cast<double>(df[d * T + t]) + 1.0)) + 1.0;
            weights[v * T + t] = tf * idf;
            norm += weights[v * T + t] * weights[v * T + t];
        }
        norm = std::sqrt(norm);
        for (std::size_t t = 0; t < T; ++t) {
            weights[v * T + t] /= norm;
        }
    }
    return HtModel(tree, T, std::move(weights));
}

HtDecision ht_classify(const HtModel& model, TagIndex t, NodeIndex leaf) {
    check_query(model.tree(), model.vocab_size(), t, leaf);
    const auto path = model.tree().path(leaf);
    HtDecision out{path.front(), true};
    double best = 0.0;
    for (auto v : path) {
        const double w = model.weight(v, t);
        if (w > best) {
            best = w;
            out = {v, false};
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json nb_to_json(const NbModel& model) {
    const auto& tree = model.tree();
    auto counts = nlohmann::json::array();
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        auto entries = nlohmann::json::array();
        for (TagIndex t = 0; t < model.vocab_size(); ++t) {
            if (auto c = model.count(v, t)) {
                entries.push_back({t, c});
            }
        }
        counts.push_back({{"node", tree.id(v)}, {"counts", std::move(entries)}});
    }
    return {{"version", "nb-model/1"},
            {"tree", tree_to_json(tree)},
            {"vocab_size", model.vocab_size()},
            {"smoothing", model.smoothing()},
            {"nodes", std::move(counts)}};
}

NbModel nb_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("version", "") != "nb-model/1") {
        throw Error("InvalidModelFile", "expected an \"nb-model/1\" document");
    }
    try {
        auto tree = tree_from_json(doc.at("tree"));
        const auto T = doc.at("vocab_size").get<std::size_t>();
        std::vector<std::uint64_t> counts(tree.size() * T, 0);
        for (const auto& node : doc.at("nodes")) {
            const auto v = tree.index_of(node.at("node").get<std::string>());
            for (const auto& e : node.at("counts")) {
                counts.at(v * T + e.at(0).get<std::size_t>()) = e.at(1).get<std::uint64_t>();
            }
        }
        return NbModel(std::move(tree), T, doc.at("smoothing").get<double>(), std::move(counts));
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidModelFile", e.what());
    }
}

nlohmann::json ht_to_json(const HtModel& model) {
    const auto& tree = model.tree();
    auto nodes = nlohmann::json::array();
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        auto entries = nlohmann::json::array();
        for (TagIndex t = 0; t < model.vocab_size(); ++t) {
            if (const double w = model.weight(v, t); w != 0.0) {
                entries.push_back({t, w});
            }
        }
        nodes.push_back({{"node", tree.id(v)}, {"weights", std::move(entries)}});
    }
    return {{"version", "ht-model/1"},
            {"tree", tree_to_json(tree)},
            {"vocab_size", model.vocab_size()},
            {"nodes", std::move(nodes)}};
}

HtModel ht_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("version", "") != "ht-model/1") {
        throw Error("InvalidModelFile", "expected an \"ht-model/1\" document");
    }
    try {
        auto tree = tree_from_json(doc.at("tree"));
        const auto T = doc.at("vocab_size").get<std::size_t>();
        std::vector<double> weights(tree.size() * T, 0.0);
        for (const auto& node : doc.at("nodes")) {
            const auto v = tree.index_of(node.at("node").get<std::string>());
            for (const auto& e : node.at("weights")) {
                weights.at(v * T + e.at(0).get<std::size_t>()) = e.at(1).get<double>();
            }
        }
        return HtModel(std::move(tree), T, std::move(weights));
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidModelFile", e.what());
    }
}

}  // namespace ghm
