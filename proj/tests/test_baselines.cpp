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


#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"

#include "ghm/baselines.hpp"
#include "ghm/synth.hpp"
#include "support.hpp"

using namespace ghm;

namespace {

/// root -> {a, b, c}
GeoTree three_leaf_tree() {
    return GeoTree::build({{"root", "", std::nullopt}, {"a", "", "root"}, {"b", "", "root"}, {"c", "", "root"}});
}

CountMatrix random_counts(std::mt19937_64& gen, const GeoTree& tree, std::size_t T) {
    std::vector<std::string> ids;
    std::vector<std::vector<CountEntry>> rows;
    for (auto leaf : tree.leaves()) {
        ids.push_back(tree.id(leaf));
        auto& row = rows.emplace_back();
        for (TagIndex t = 0; t < T; ++t) {
            if (gen() % 3 == 0) {
                row.push_back({t, 1 + gen() % 9});
            }
        }
    }
    return CountMatrix(ids, T, rows);
}

/// Per-node tallies by walking every leaf's ancestors.
std::map<NodeIndex, std::vector<double>> tally(const CountMatrix& counts, const GeoTree& tree) {
    std::map<NodeIndex, std::vector<double>> out;
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        out[v].assign(counts.vocab_size(), 0.0);
    }
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        for (auto v = std::optional<NodeIndex>(tree.index_of(counts.leaf_id(r))); v; v = tree.parent(*v)) {
            for (const auto& e : counts.row(r)) {
                out[*v][e.tag] += static_cast<double>(e.count);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("nb: single leaf tree has identical root and leaf distributions") {
    const auto tree = GeoTree::build({{"r", "", std::nullopt}, {"l", "", "r"}});
    const auto nb = nb_train(CountMatrix({"l"}, 3, {{{0, 2}, {2, 5}}}), tree, 0.5);
    for (TagIndex t = 0; t < 3; ++t) {
        CHECK(nb.probability(0, t) == nb.probability(1, t));
    }
}

TEST_CASE("nb: root pools both leaves") {
    const auto tree = test::two_leaf_tree();
    const auto nb = nb_train(CountMatrix({"a", "b"}, 4, {{{0, 3}}, {{2, 1}, {3, 4}}}), tree, 1.0);
    CHECK(nb.count(tree.root(), 0) == 3);
    CHECK(nb.count(tree.root(), 3) == 4);
    CHECK(nb.node_total(tree.root()) == 8);
    CHECK(nb.probability(tree.root(), 0) == doctest::Approx(4.0 / 12.0).epsilon(1e-15));
}

TEST_CASE("nb: node counts equal direct tallies on random instances") {
    std::mt19937_64 gen(1);
    const auto tree = test::fixture_tree();
    for (int i = 0; i < 20; ++i) {
        const auto counts = random_counts(gen, tree, 7);
        const auto nb = nb_train(counts, tree, 0.01);
        const auto oracle = tally(counts, tree);
        for (NodeIndex v = 0; v < tree.size(); ++v) {
            for (TagIndex t = 0; t < 7; ++t) {
                CHECK(static_cast<double>(nb.count(v, t)) == oracle.at(v)[t]);
            }
        }
    }
}

TEST_CASE("nb: a tag seen only in one leaf goes to that leaf") {
    const auto tree = three_leaf_tree();
    const CountMatrix counts({"a", "b", "c"}, 3, {{{0, 5}, {1, 1}}, {{1, 4}, {2, 2}}, {{1, 3}, {2, 3}}});
    const auto nb = nb_train(counts, tree, 0.01);
    CHECK(nb_classify(nb, 0, tree.index_of("a")) == tree.index_of("a"));
}

TEST_CASE("nb: equal frequencies tie and the leaf wins") {
    // Every leaf (1, 1) with pseudo-count 1: (1+1)/(2+2) at a leaf and
    // (2+1)/(4+2) at the root, both exactly 0.5.
    const auto tree = test::two_leaf_tree();
    const auto nb = nb_train(CountMatrix({"a", "b"}, 2, {{{0, 1}, {1, 1}}, {{0, 1}, {1, 1}}}), tree, 1.0);
    CHECK(nb.probability(tree.root(), 0) == 0.5);
    CHECK(nb.probability(tree.index_of("a"), 0) == 0.5);
    CHECK(nb_classify(nb, 0, tree.index_of("a")) == tree.index_of("a"));
    CHECK(nb_classify(nb, 1, tree.index_of("b")) == tree.index_of("b"));
}

TEST_CASE("nb: argmax invariant to scaling counts with the pseudo-count") {
    std::mt19937_64 gen(2);
    const auto tree = test::fixture_tree();
    for (int i = 0; i < 10; ++i) {
        const auto counts = random_counts(gen, tree, 6);
        std::vector<std::string> ids(counts.leaf_ids().begin(), counts.leaf_ids().end());
        std::vector<std::vector<CountEntry>> rows;
        for (std::size_t r = 0; r < counts.rows(); ++r) {
            auto& row = rows.emplace_back();
            for (const auto& e : counts.row(r)) {
                row.push_back({e.tag, e.count * 7});
            }
        }
        const auto a = nb_train(counts, tree, 0.5);
        const auto b = nb_train(CountMatrix(ids, 6, rows), tree, 3.5);
        for (auto leaf : tree.leaves()) {
            for (TagIndex t = 0; t < 6; ++t) {
                CHECK(nb_classify(a, t, leaf) == nb_classify(b, t, leaf));
            }
        }
    }
}

TEST_CASE("nb: validation") {
    const auto tree = test::two_leaf_tree();
    const CountMatrix counts({"a", "b"}, 2, {{{0, 1}}, {}});
    CHECK_ERROR(nb_train(counts, tree, 0.0), "InvalidConfig");
    CHECK_ERROR(nb_train(CountMatrix({"a"}, 2, {{}}), tree, 1.0), "LeafSetMismatch");
    const auto nb = nb_train(counts, tree, 1.0);
    CHECK_ERROR(nb_classify(nb, 2, tree.index_of("a")), "UnknownTag");
    CHECK_ERROR(nb_classify(nb, 0, tree.root()), "UnknownLeaf");
}

TEST_CASE("ht: idf is 1 for a tag present at every node of a depth") {
    const auto tree = three_leaf_tree();
    // Tag 0 everywhere with equal tf, tag 1 only in a.
    const CountMatrix counts({"a", "b", "c"}, 2, {{{0, 2}, {1, 2}}, {{0, 4}}, {{0, 4}}});
    const auto ht = ht_train(counts, tree);
    // Leaf b holds only tag 0: unit vector.
    CHECK(ht.weight(tree.index_of("b"), 0) == doctest::Approx(1.0).epsilon(1e-15));
    // Leaf a: tf (0.5, 0.5), idf (1, log(4/2) + 1).
    const double w0 = 0.5, w1 = 0.5 * (std::log(2.0) + 1.0);
    const double norm = std::sqrt(w0 * w0 + w1 * w1);
    CHECK(ht.weight(tree.index_of("a"), 0) == doctest::Approx(w0 / norm).epsilon(1e-14));
    CHECK(ht.weight(tree.index_of("a"), 1) == doctest::Approx(w1 / norm).epsilon(1e-14));
    // The root is alone at its depth: idf 1 for every present tag.
    CHECK(ht.weight(tree.root(), 1) / ht.weight(tree.root(), 0) == doctest::Approx(2.0 / 10.0).epsilon(1e-14));
}

TEST_CASE("ht: a tag in 1 of 65 leaves gets idf log(66/2) + 1") {
    const auto tree = reference_tree();
    std::vector<std::string> ids;
    std::vector<std::vector<CountEntry>> rows;
    for (auto leaf : tree.leaves()) {
        ids.push_back(tree.id(leaf));
        rows.push_back({{0, 3}});
    }
    rows[0].push_back({1, 3});
    const auto ht = ht_train(CountMatrix(ids, 2, rows), tree);
    const auto first = tree.leaves()[0];
    CHECK(ht.weight(first, 1) / ht.weight(first, 0) == doctest::Approx(std::log(66.0 / 2.0) + 1.0).epsilon(1e-14));
    CHECK(ht_classify(ht, 1, first).node == first);
}

TEST_CASE("ht: weights equal an independent recomputation") {
    std::mt19937_64 gen(3);
    const auto tree = test::fixture_tree();
    for (int i = 0; i < 20; ++i) {
        const auto counts = random_counts(gen, tree, 6);
        const auto ht = ht_train(counts, tree);
        const auto nodes = tally(counts, tree);
        for (NodeIndex v = 0; v < tree.size(); ++v) {
            std::size_t L = 0;
            std::vector<std::size_t> df(6, 0);
            for (NodeIndex u = 0; u < tree.size(); ++u) {
                if (tree.node_depth(u) != tree.node_depth(v)) {
                    continue;
                }
                ++L;
                for (TagIndex t = 0; t < 6; ++t) {
                    df[t] += nodes.at(u)[t] > 0;
                }
            }
            double total = 0.0;
            for (double c : nodes.at(v)) {
                total += c;
            }
            std::vector<double> w(6, 0.0);
            double sq = 0.0;
            for (TagIndex t = 0; t < 6; ++t) {
                if (total > 0) {
                    w[t] = nodes.at(v)[t] / total * (std::log((L + 1.0) / (df[t] + 1.0)) + 1.0);
                }
                sq += w[t] * w[t];
            }
            for (TagIndex t = 0; t < 6; ++t) {
                const double expected = sq > 0 ? w[t] / std::sqrt(sq) : 0.0;
                CHECK(ht.weight(v, t) == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("ht: node vectors have unit norm unless empty") {
    std::mt19937_64 gen(4);
    const auto tree = test::fixture_tree();
    const auto counts = random_counts(gen, tree, 10);
    const auto ht = ht_train(counts, tree);
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        double sq = 0.0;
        for (double w : ht.weights(v)) {
            sq += w * w;
        }
        if (sq > 0) {
            CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("ht: zero weight everywhere returns the leaf with zero confidence") {
    const auto tree = three_leaf_tree();
    const auto ht = ht_train(CountMatrix({"a", "b", "c"}, 3, {{{0, 1}}, {{1, 1}}, {}}), tree);
    const auto c = tree.index_of("c");
    const auto d = ht_classify(ht, 2, c);
    CHECK(d.node == c);
    CHECK(d.zero_confidence);
    CHECK_FALSE(ht_classify(ht, 0, tree.index_of("a")).zero_confidence);
}

TEST_CASE("ht: a tag unique to one leaf is assigned to it") {
    const auto tree = three_leaf_tree();
    const CountMatrix counts({"a", "b", "c"}, 3, {{{0, 4}, {2, 4}}, {{0, 4}, {1, 4}}, {{0, 4}, {1, 4}}});
    const auto ht = ht_train(counts, tree);
    CHECK(ht_classify(ht, 2, tree.index_of("a")).node == tree.index_of("a"));
    CHECK(ht_classify(ht, 0, tree.index_of("b")).node == tree.root());
}

TEST_CASE("both classifiers stay on the leaf's path") {
    std::mt19937_64 gen(5);
    const auto tree = test::fixture_tree();
    const auto counts = random_counts(gen, tree, 8);
    const auto nb = nb_train(counts, tree, 0.01);
    const auto ht = ht_train(counts, tree);
    for (auto leaf : tree.leaves()) {
        const auto path = tree.path(leaf);
        const std::set<NodeIndex> on_path(path.begin(), path.end());
        for (TagIndex t = 0; t < 8; ++t) {
            CHECK(on_path.count(nb_classify(nb, t, leaf)));
            CHECK(on_path.count(ht_classify(ht, t, leaf).node));
        }
    }
}

TEST_CASE("baseline json round trips") {
    std::mt19937_64 gen(6);
    const auto tree = test::fixture_tree();
    const auto counts = random_counts(gen, tree, 9);
    const auto nb = nb_train(counts, tree, 0.25);
    const auto nb2 = nb_from_json(nlohmann::json::parse(nb_to_json(nb).dump()));
    CHECK(nb2.smoothing() == 0.25);
    const auto ht = ht_train(counts, tree);
    const auto ht2 = ht_from_json(nlohmann::json::parse(ht_to_json(ht).dump()));
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        for (TagIndex t = 0; t < 9; ++t) {
            CHECK(nb2.count(v, t) == nb.count(v, t));
            CHECK(ht2.weight(v, t) == ht.weight(v, t));
        }
    }
    CHECK(nb_to_json(nb)["version"] == "nb-model/1");
    CHECK(ht_to_json(ht)["version"] == "ht-model/1");
}
