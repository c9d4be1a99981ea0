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

#ifndef GHM_SYNTH_HPP
#define GHM_SYNTH_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "ghm/corpus.hpp"
#include "ghm/geotree.hpp"

namespace ghm {

/// Country -> 2 cities -> 37 + 28 neighborhoods (68 nodes, 3 levels): the
/// shape of the San Francisco / Manhattan hierarchy.
GeoTree reference_tree();

struct GenConfig {
    GeoTree tree = reference_tree();
    std::size_t vocab_size = 7936;
    double alpha = 0.1;  // Dirichlet concentration of every theta_v
    double beta = 1.0;   // Dirichlet concentration of every leaf mixture
    double gamma_low = 3.0;
    double gamma_high = 6.0;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;
};

nlohmann::json gen_config_to_json(const GenConfig& cfg);

/// (leaf, tag, level) -> count. `level` is 1-based, root = 1.
struct LabeledTriple {
    NodeIndex leaf;
    TagIndex tag;
    std::uint32_t level;
    std::uint64_t count;

    bool operator==(const LabeledTriple&) const = default;
};

/// Generated tags with their true levels, plus the generating parameters.
struct LabeledCorpus {
    GeoTree tree;
    std::size_t vocab_size = 0;
    std::uint64_t seed = 0;
    /// Sorted by (leaf, tag, level); counts are positive.
    std::vector<LabeledTriple> triples;
    /// The same instances with the labels marginalized out.
    CountMatrix counts;
    /// Generating theta per node. Empty when the corpus was read from disk.
    std::vector<std::vector<double>> theta;
    /// Generating p(z | n) per node in level order (root first); empty for
    /// internal nodes and for corpora read from disk.
    std::vector<std::vector<double>> mixture;
    /// Instances drawn per leaf, in tree leaf order.
    std::vector<std::uint64_t> instances;
};

/// Samples a corpus: theta_v ~ Dir(alpha) per node, p(z|n) ~ Dir(beta) per
/// leaf, then per leaf gamma ~ U[gamma_low, gamma_high] and exactly
/// floor(2 * 10^gamma) (level, tag) draws. Deterministic for a fixed seed.
LabeledCorpus generate(const GenConfig& cfg);

/// Normalized histogram of true levels of a leaf, root first. Throws
/// UnknownLeaf; for a leaf without instances throws EmptyLeaf unless
/// `zeros_if_empty`, in which case a zero vector is returned.
std::vector<double> empirical_label_distribution(const LabeledCorpus& corpus, NodeIndex leaf,
                                                 bool zeros_if_empty = false);

/// JSON-lines dump: one header line, then one {"leaf","tag","level","count"}
/// line per triple.
void write_corpus(std::ostream& out, const LabeledCorpus& corpus, const GenConfig& cfg);
/// Reads a dump back (generating parameters are not part of it).
LabeledCorpus read_corpus(std::istream& in);

}  // namespace ghm

#endif  // GHM_SYNTH_HPP
