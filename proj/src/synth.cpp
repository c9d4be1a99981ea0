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

#include "ghm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <tuple>

#include "ghm/error.hpp"
#include "ghm/random.hpp"

namespace ghm {

GeoTree reference_tree() {
    std::vector<NodeSpec> spec{{"usa", "United States", std::nullopt},
                               {"usa/sf", "San Francisco", "usa"},
                               {"usa/manhattan", "Manhattan", "usa"}};
    char buf[64];
    for (int i = 1; i <= 37; ++i) {
        std::snprintf(buf, sizeof buf, "usa/sf/n%02d", i);
        spec.push_back({buf, "SF neighborhood " + std::to_string(i), "usa/sf"});
    }
    for (int i = 1; i <= 28; ++i) {
        std::snprintf(buf, sizeof buf, "usa/manhattan/n%02d", i);
        spec.push_back({buf, "Manhattan neighborhood " + std::to_string(i), "usa/manhattan"});
    }
    return GeoTree::build(std::move(spec));
}

void GenConfig::validate() const {
    if (vocab_size == 0) {
        throw Error("InvalidConfig", "vocabulary size must be positive");
    }
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw Error("InvalidConfig", "Dirichlet concentrations must be positive");
    }
    if (!(gamma_low >= 0.0) || !(gamma_high >= gamma_low) || !std::isfinite(gamma_high)) {
        throw Error("InvalidConfig", "gamma range must satisfy 0 <= low <= high");
    }
    if (gamma_high > 12.0) {
        throw Error("InvalidConfig", "gamma above 12 would draw more than 10^12 tags per leaf");
    }
}

nlohmann::json gen_config_to_json(const GenConfig& cfg) {
    return {{"vocab_size", cfg.vocab_size},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"gamma", {cfg.gamma_low, cfg.gamma_high}},
            {"seed", cfg.seed},
            {"nodes", cfg.tree.size()},
            {"leaves", cfg.tree.leaves().size()}};
}

LabeledCorpus generate(const GenConfig& cfg) {
    cfg.validate();
    const auto& tree = cfg.tree;
    const std::size_t T = cfg.vocab_size;

    LabeledCorpus corpus;
    corpus.tree = tree;
    corpus.vocab_size = T;
    corpus.seed = cfg.seed;
    corpus.theta.resize(tree.size());
    corpus.mixture.resize(tree.size());

    // Parameters come from the master stream in node order; each leaf then
    // draws from its own derived stream.
    Rng master(cfg.seed);
    std::vector<AliasTable> tag_tables(tree.size());
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        corpus.theta[v] = master.dirichlet(T, cfg.alpha);
        tag_tables[v] = AliasTable(corpus.theta[v]);
        if (tree.is_leaf(v)) {
            corpus.mixture[v] = master.dirichlet(tree.path(v).size(), cfg.beta);
        }
    }

    std::vector<std::string> leaf_ids;
    std::vector<std::vector<CountEntry>> rows;
    std::vector<std::uint64_t> dense;
    for (std::size_t i = 0; i < tree.leaves().size(); ++i) {
        const NodeIndex leaf = tree.leaves()[i];
        const auto path = tree.path(leaf);
        const std::size_t levels = path.size();
        Rng rng(derive_seed(cfg.seed, i + 1));

        const double gamma = rng.uniform(cfg.gamma_low, cfg.gamma_high);
        const auto draws = static_cast<std::uint64_t>(std::floor(2.0 * std::pow(10.0, gamma)));
        corpus.instances.push_back(draws);

        dense.assign(levels * T, 0);
        const auto& mix = corpus.mixture[leaf];
        for (std::uint64_t d = 0; d < draws; ++d) {
            const std::size_t z = sample_categorical(rng, mix);  // 0-based level, root first
            const NodeIndex node = path[levels - 1 - z];
            ++dense[z * T + tag_tables[node].sample(rng)];
        }

        auto& row = rows.emplace_back();
        for (TagIndex t = 0; t < T; ++t) {
            std::uint64_t total = 0;
            for (std::size_t z = 0; z < levels; ++z) {
                if (const auto c = dense[z * T + t]) {
                    corpus.triples.push_back({leaf, t, static_cast<std::uint32_t>(z + 1), c});
                    total += c;
                }
            }
            if (total) {
                row.push_back({t, total});
            }
        }
        leaf_ids.push_back(tree.id(leaf));
    }
    corpus.counts = CountMatrix(std::move(leaf_ids), T, std::move(rows));
    return corpus;
}

std::vector<double> empirical_label_distribution(const LabeledCorpus& corpus, NodeIndex leaf,
                                                 bool zeros_if_empty) {
    const auto& tree = corpus.tree;
    if (leaf >= tree.size() || !tree.is_leaf(leaf)) {
        throw Error("UnknownLeaf", "node index " + std::to_string(leaf) + " is not a leaf");
    }
    std::vector<double> hist(tree.path(leaf).size(), 0.0);
    auto first = std::lower_bound(corpus.triples.begin(), corpus.triples.end(), leaf,
                                  [](const LabeledTriple& x, NodeIndex n) { return x.leaf < n; });
    double total = 0.0;
    for (auto it = first; it != corpus.triples.end() && it->leaf == leaf; ++it) {
        hist.at(it->level - 1) += static_cast<double>(it->count);
        total += static_cast<double>(it->count);
    }
    if (total == 0.0) {
        if (zeros_if_empty) {
            return hist;
        }
        throw Error("EmptyLeaf", "leaf '" + tree.id(leaf) + "' has no generated instances");
    }
    for (auto& h : hist) {
        h /= total;
    }
    return hist;
}

void write_corpus(std::ostream& out, const LabeledCorpus& corpus, const GenConfig& cfg) {
    nlohmann::json header{{"version", "ghm-corpus/1"},
                          {"config", gen_config_to_json(cfg)},
                          {"seed", corpus.seed},
                          {"vocab_size", corpus.vocab_size},
                          {"tree", tree_to_json(corpus.tree)},
                          {"instances", corpus.instances}};
    out << header.dump() << '\n';
    for (const auto& x : corpus.triples) {
        out << "{\"leaf\":" << nlohmann::json(corpus.tree.id(x.leaf)).dump() << ",\"tag\":" << x.tag
            << ",\"level\":" << x.level << ",\"count\":" << x.count << "}\n";
    }
}

LabeledCorpus read_corpus(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("InvalidCorpusFile", "corpus file is empty");
    }
    LabeledCorpus corpus;
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.value("version", "") != "ghm-corpus/1") {
            throw Error("InvalidCorpusFile", "expected a \"ghm-corpus/1\" header");
        }
        corpus.tree = tree_from_json(header.at("tree"));
        corpus.vocab_size = header.at("vocab_size").get<std::size_t>();
        corpus.seed = header.value("seed", std::uint64_t{0});
        corpus.instances = header.value("instances", std::vector<std::uint64_t>{});
        const auto& tree = corpus.tree;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            const auto doc = nlohmann::json::parse(line);
            const auto leaf = tree.index_of(doc.at("leaf").get<std::string>());
            const auto level = doc.at("level").get<std::uint32_t>();
            const auto tag = doc.at("tag").get<TagIndex>();
            if (!tree.is_leaf(leaf) || level < 1 || level > tree.path(leaf).size() ||
                tag >= corpus.vocab_size) {
                throw Error("InvalidCorpusFile", "triple out of range: " + line);
            }
            corpus.triples.push_back({leaf, tag, level, doc.at("count").get<std::uint64_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidCorpusFile", e.what());
    }
    std::sort(corpus.triples.begin(), corpus.triples.end(), [](const auto& a, const auto& b) {
        return std::tie(a.leaf, a.tag, a.level) < std::tie(b.leaf, b.tag, b.level);
    });
    std::vector<std::string> leaf_ids;
    std::vector<std::vector<CountEntry>> rows(corpus.tree.leaves().size());
    for (auto leaf : corpus.tree.leaves()) {
        leaf_ids.push_back(corpus.tree.id(leaf));
    }
    for (const auto& x : corpus.triples) {
        rows[corpus.tree.leaf_position(x.leaf)].push_back({x.tag, x.count});
    }
    corpus.counts = CountMatrix(std::move(leaf_ids), corpus.vocab_size, std::move(rows));
    return corpus;
}

}  // namespace ghm
