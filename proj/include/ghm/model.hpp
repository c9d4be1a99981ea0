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

#ifndef GHM_MODEL_HPP
#define GHM_MODEL_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ghm/corpus.hpp"
#include "ghm/geotree.hpp"

namespace ghm {

/// EM settings. Smoothing constants are Dirichlet pseudo-counts added in
/// the M-step (theta: per tag, pi: per path node).
/// Starting point of theta. Internal nodes always start from the pooled
/// counts of their descendant leaves. `flat_leaves` starts every leaf's theta
/// uniform; `pooled` starts it from the leaf's own counts, which sits next to
/// the fixed point where each leaf explains all of its data alone.
enum class InitMode { flat_leaves, pooled };

std::string_view init_mode_name(InitMode mode);
/// Throws InvalidConfig.
InitMode parse_init_mode(std::string_view name);

struct EmConfig {
    std::size_t max_iterations = 200;
    double tolerance = 1e-6;  // relative log-likelihood improvement
    double alpha_smooth = 0.01;
    double beta_smooth = 0.1;
    InitMode init = InitMode::flat_leaves;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;
};

nlohmann::json em_config_to_json(const EmConfig& cfg);
EmConfig em_config_from_json(const nlohmann::json& doc);

struct TrainingInfo {
    std::size_t iterations = 0;  // M-steps performed
    bool converged = false;
    double log_likelihood = 0.0;  // of the final parameters
    /// trace[i] is the log-likelihood after i M-steps (trace[0]: initial guess).
    std::vector<double> trace;
    /// Same, for the penalized (MAP) objective EM actually ascends.
    std::vector<double> objective_trace;
};

/// Posterior over the nodes of a leaf's path, in path order (leaf first).
struct LevelPosterior {
    std::vector<NodeIndex> nodes;
    std::vector<double> probabilities;
};

struct RankedTag {
    TagIndex tag;
    double probability;  // p(t | n)
    NodeIndex node;      // classification of (t, n)
};

struct RegionMatch {
    NodeIndex leaf;
    double similarity;
    std::vector<TagIndex> common_tags;
};

struct RegionMapping {
    NodeIndex from;
    std::vector<RegionMatch> matches;
};

/// Trained hierarchical mixture: a tag distribution per tree node and, per
/// leaf, mixture weights over the nodes of its root path.
class GhmModel {
public:
    /// `theta[v]` has vocab.size() entries per node; `pi[leaf]` follows
    /// tree.path(leaf) and is empty for internal nodes. Throws InvalidModel
    /// when a distribution is not strictly positive or does not sum to 1.
    GhmModel(GeoTree tree, Vocabulary vocab, std::vector<std::vector<double>> theta,
             std::vector<std::vector<double>> pi, EmConfig config = {}, TrainingInfo info = {});

    const GeoTree& tree() const { return tree_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    const EmConfig& config() const { return config_; }
    const TrainingInfo& training() const { return info_; }

    std::span<const double> theta(NodeIndex node) const;
    /// Mixture weights of a leaf, aligned with tree().path(leaf).
    std::span<const double> pi(NodeIndex leaf) const;

    /// p(t | n) = sum over the path of theta_v(t) * pi_n(v).
    double tag_probability(TagIndex t, NodeIndex leaf) const;
    LevelPosterior posterior(TagIndex t, NodeIndex leaf) const;
    /// Posterior argmax; ties go to the deepest node.
    NodeIndex classify(TagIndex t, NodeIndex leaf) const;
    /// k most probable tags of a leaf, descending, ties by tag index.
    std::vector<RankedTag> top_tags(NodeIndex leaf, std::size_t k) const;
    /// Weight of the leaf's own distribution in its mixture.
    double uniqueness(NodeIndex leaf) const;
    /// Cosine similarity of two leaves' own distributions.
    double similarity(NodeIndex a, NodeIndex b) const;

    /// Throws UnknownLeaf / UnknownTag.
    void check_leaf(NodeIndex leaf) const;
    void check_tag(TagIndex t) const;

private:
    GeoTree tree_;
    Vocabulary vocab_;
    std::vector<double> theta_;  // node-major, vocab_size() per node
    std::vector<std::vector<double>> pi_;
    EmConfig config_;
    TrainingInfo info_;
};

/// Fits the model by MAP-EM. Throws EmptyCounts, LeafSetMismatch,
/// InvalidConfig, or NumericalError("NonFiniteLikelihood").
GhmModel train(const CountMatrix& counts, const GeoTree& tree, const EmConfig& cfg);
GhmModel train(const CountMatrix& counts, const GeoTree& tree, const Vocabulary& vocab,
               const EmConfig& cfg);

/// sum_n sum_t x_nt log p(t | n). Throws VocabularyMismatch, LeafSetMismatch.
double log_likelihood(const GhmModel& model, const CountMatrix& counts);

/// The `count` tags maximizing theta_a(t) * theta_b(t), descending, ties by
/// tag index. Throws UnknownLeaf.
std::vector<TagIndex> common_tags(const GhmModel& model, NodeIndex a, NodeIndex b, std::size_t count);

/// For every leaf in `from`, the k most similar leaves of `to` with the
/// `common` tags that maximize theta_n(t) * theta_n'(t).
/// Throws EmptyLeafSet, OverlappingLeafSets, UnknownLeaf.
std::vector<RegionMapping> map_regions(const GhmModel& model, std::span<const NodeIndex> from,
                                       std::span<const NodeIndex> to, std::size_t k,
                                       std::size_t common = 5);

/// 1-based hierarchy level of a node: root 1, its children 2, ...
inline std::size_t level_of(const GeoTree& tree, NodeIndex node) { return tree.node_depth(node) + 1; }

nlohmann::json model_to_json(const GhmModel& model);
GhmModel model_from_json(const nlohmann::json& doc);

}  // namespace ghm

#endif  // GHM_MODEL_HPP
