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

#ifndef GHM_BASELINES_HPP
#define GHM_BASELINES_HPP

#include <span>
#include <vector>

#include "json.hpp"

#include "ghm/corpus.hpp"
#include "ghm/geotree.hpp"

namespace ghm {

/// Naive Bayes over path nodes: each node is a class whose multinomial is
/// estimated from the pooled counts of all its descendant leaves. With a
/// uniform class prior the decision is a per-tag frequency argmax.
class NbModel {
public:
    NbModel(GeoTree tree, std::size_t vocab_size, double smoothing,
            std::vector<std::uint64_t> node_counts);

    const GeoTree& tree() const { return tree_; }
    std::size_t vocab_size() const { return T_; }
    double smoothing() const { return smoothing_; }

    /// Pooled count of tag t at node v.
    std::uint64_t count(NodeIndex v, TagIndex t) const { return counts_.at(v * T_ + t); }
    std::uint64_t node_total(NodeIndex v) const { return totals_.at(v); }
    /// Additively smoothed p(t | v).
    double probability(NodeIndex v, TagIndex t) const;

private:
    GeoTree tree_;
    std::size_t T_;
    double smoothing_;
    std::vector<std::uint64_t> counts_;  // node-major
    std::vector<std::uint64_t> totals_;
};

/// Hierarchical TF-IDF. Every node is a document made of its descendants'
/// tags; documents at the same depth form one collection:
///   w(t, v) = tf(t, v) * (log((L + 1) / (df + 1)) + 1)
/// with tf the relative frequency in v, L the number of nodes at v's depth
/// and df how many of them contain t. Node vectors are L2-normalized and
/// compared across levels.
class HtModel {
public:
    HtModel(GeoTree tree, std::size_t vocab_size, std::vector<double> weights);

    const GeoTree& tree() const { return tree_; }
    std::size_t vocab_size() const { return T_; }
    double weight(NodeIndex v, TagIndex t) const { return weights_.at(v * T_ + t); }
    std::span<const double> weights(NodeIndex v) const;

private:
    GeoTree tree_;
    std::size_t T_;
    std::vector<double> weights_;  // node-major
};

struct HtDecision {
    NodeIndex node;
    /// True when every path node has weight 0 for the tag.
    bool zero_confidence = false;
};

/// Throws LeafSetMismatch, InvalidConfig (smoothing <= 0).
NbModel nb_train(const CountMatrix& counts, const GeoTree& tree, double smoothing);
/// Argmax of p(t | v) over the leaf's path, deepest node on ties.
NodeIndex nb_classify(const NbModel& model, TagIndex t, NodeIndex leaf);

HtModel ht_train(const CountMatrix& counts, const GeoTree& tree);
HtDecision ht_classify(const HtModel& model, TagIndex t, NodeIndex leaf);

nlohmann::json nb_to_json(const NbModel& model);
NbModel nb_from_json(const nlohmann::json& doc);
nlohmann::json ht_to_json(const HtModel& model);
HtModel ht_from_json(const nlohmann::json& doc);

}  // namespace ghm

#endif  // GHM_BASELINES_HPP
