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


// Acceptance checks 1-7. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ghm/corpus.hpp"
#include "ghm/eval.hpp"
#include "ghm/model.hpp"
#include "ghm/polygon.hpp"
#include "ghm/synth.hpp"

using namespace ghm;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(GHM_FIXTURE_DIR) + "/" + name);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

EvalReport table_four(double gamma_high) {
    EvalConfig cfg;
    cfg.gen.gamma_low = 3.0;
    cfg.gen.gamma_high = gamma_high;
    cfg.trials = 50;
    cfg.holdout = 0.10;
    cfg.seed = 2026;
    cfg.threads = worker_count();
    return run_eval(cfg);
}

Outcome criterion1(const EvalReport& r) {
    const double ghm = r.method(Method::ghm).mean, ht = r.method(Method::ht).mean;
    const double nb = r.method(Method::nb).mean, rnd = r.method(Method::random).mean;
    const bool pass = ghm >= 0.72 && ghm <= 0.78 && nb >= 0.47 && nb <= 0.55 && rnd >= 0.31 && rnd <= 0.35 &&
                      ht >= 0.53 && ht <= 0.66 && ghm > ht && ht > nb;
    return {pass, format("GHM %.4f (std %.4f) in [0.72,0.78], HT %.4f in [0.53,0.66], NB %.4f in [0.47,0.55], "
                         "random %.4f in [0.31,0.35], GHM > HT > NB; %.0f s",
                         ghm, r.method(Method::ghm).std, ht, nb, rnd, r.seconds)};
}

Outcome criterion2(const EvalReport& wide, const EvalReport& narrow) {
    const double ghm = narrow.method(Method::ghm).mean;
    const double ghm_drop = wide.method(Method::ghm).mean - ghm;
    const double ht_drop = wide.method(Method::ht).mean - narrow.method(Method::ht).mean;
    return {ghm >= 0.68 && ghm_drop < ht_drop,
            format("gamma in [3,4]: GHM %.4f >= 0.68, GHM drop %.4f < HT drop %.4f", ghm, ghm_drop, ht_drop)};
}

/// Random tree with at most three leaves.
GeoTree small_tree(std::mt19937_64& gen) {
    switch (gen() % 4) {
        case 0: return GeoTree::build({{"r", "", std::nullopt}, {"a", "", "r"}});
        case 1: return GeoTree::build({{"r", "", std::nullopt}, {"a", "", "r"}, {"b", "", "r"}});
        case 2:
            return GeoTree::build({{"r", "", std::nullopt}, {"a", "", "r"}, {"b", "", "r"}, {"c", "", "r"}});
        default:
            return GeoTree::build(
                {{"r", "", std::nullopt}, {"m", "", "r"}, {"a", "", "m"}, {"b", "", "m"}, {"c", "", "r"}});
    }
}

Outcome criterion3() {
    std::mt19937_64 gen(3);
    EmConfig em;
    em.alpha_smooth = 1e-10;
    em.beta_smooth = 1e-10;
    em.tolerance = 1e-14;
    em.max_iterations = 20000;
    int ok = 0;
    double worst_gap = -INFINITY, worst_dip = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto tree = small_tree(gen);
        const std::size_t T = 2 + gen() % 4;
        std::vector<std::string> ids;
        std::vector<std::vector<CountEntry>> rows;
        double saturated = 0.0;
        for (auto leaf : tree.leaves()) {
            ids.push_back(tree.id(leaf));
            auto& row = rows.emplace_back();
            for (TagIndex t = 0; t < T; ++t) {
                if (const auto c = gen() % 8) {
                    row.push_back({t, c});
                }
            }
            if (row.empty()) {
                row.push_back({0, 1});
            }
            double n = 0.0;
            for (const auto& e : row) {
                n += static_cast<double>(e.count);
            }
            for (const auto& e : row) {
                saturated += static_cast<double>(e.count) * std::log(static_cast<double>(e.count) / n);
            }
        }
        em.seed = gen();
        const auto model = train(CountMatrix(ids, T, rows), tree, em);
        const auto& info = model.training();
        // Any (theta, pi) grid point is a model, so `saturated` bounds the grid optimum.
        const double gap = saturated - info.log_likelihood;
        double dip = 0.0;
        for (std::size_t k = 1; k < info.trace.size(); ++k) {
            dip = std::max(dip, info.trace[k - 1] - info.trace[k]);
        }
        worst_gap = std::max(worst_gap, gap);
        worst_dip = std::max(worst_dip, dip);
        ok += gap <= 1e-4 && dip <= 1e-8;
    }
    return {ok == 200, format("%d/200 instances: worst optimum gap %.3g (<= 1e-4), worst trace decrease %.3g "
                              "(<= 1e-8)",
                              ok, worst_gap, worst_dip)};
}

Outcome criterion4() {
    std::mt19937_64 gen(4);
    std::gamma_distribution<double> g(1.0, 1.0);
    auto simplex = [&](std::size_t dim) {
        std::vector<double> p(dim);
        double s = 0.0;
        for (auto& x : p) {
            s += x = g(gen) + 1e-6;
        }
        for (auto& x : p) {
            x /= s;
        }
        return p;
    };
    double worst = 0.0, worst_sum = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto tree = small_tree(gen);
        const std::size_t T = 1 + gen() % 20;
        std::vector<std::vector<double>> theta(tree.size()), pi(tree.size());
        for (NodeIndex v = 0; v < tree.size(); ++v) {
            theta[v] = simplex(T);
            if (tree.is_leaf(v)) {
                pi[v] = simplex(tree.path(v).size());
            }
        }
        const GhmModel model(tree, Vocabulary::numbered(T), theta, pi);
        const auto leaf = tree.leaves()[gen() % tree.leaves().size()];
        const TagIndex t = gen() % T;
        const auto post = model.posterior(t, leaf);
        const auto path = tree.path(leaf);
        double evidence = 0.0;
        for (std::size_t k = 0; k < path.size(); ++k) {
            evidence += theta[path[k]][t] * pi[leaf][k];
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < path.size(); ++k) {
            worst = std::max(worst, std::abs(post.probabilities[k] - theta[path[k]][t] * pi[leaf][k] / evidence));
            sum += post.probabilities[k];
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    return {worst <= 1e-12 && worst_sum <= 1e-9,
            format("1000 triples: max component error %.3g (<= 1e-12), max |sum - 1| %.3g (<= 1e-9)", worst,
                   worst_sum)};
}

Outcome criterion5() {
    std::vector<std::size_t> iterations(20);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min<std::size_t>(worker_count(), 20); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < 20;) {
                GenConfig gen;
                gen.seed = 500 + i;
                const auto corpus = generate(gen);
                EmConfig em;
                em.seed = 900 + i;
                iterations[i] = train(corpus.counts, corpus.tree, em).training().iterations;
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    auto sorted = iterations;
    std::sort(sorted.begin(), sorted.end());
    const double median = (sorted[9] + sorted[10]) / 2.0;
    return {median <= 30.0, format("20 corpora: median EM iterations %.1f (<= 30), range [%zu, %zu]", median,
                                   sorted.front(), sorted.back())};
}

Outcome criterion6() {
    std::size_t eligible = 0, close = 0;
    double total_error = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GenConfig gen;
        gen.seed = 600 + seed;
        const auto corpus = generate(gen);
        EmConfig em;
        em.seed = 700 + seed;
        const auto model = train(corpus.counts, corpus.tree, em);
        const auto& tree = corpus.tree;
        for (auto leaf : tree.leaves()) {
            if (corpus.instances[tree.leaf_position(leaf)] < 100000) {
                continue;
            }
            ++eligible;
            const double err = std::abs(model.uniqueness(leaf) - corpus.mixture[leaf].back());
            total_error += err;
            close += err <= 0.05;
        }
    }
    const double share = eligible ? static_cast<double>(close) / static_cast<double>(eligible) : 0.0;
    return {eligible > 0 && share >= 0.9,
            format("%zu/%zu leaves with nu >= 1e5 within 0.05 (%.1f%%, need >= 90%%), mean error %.3f", close,
                   eligible, 100.0 * share, eligible ? total_error / static_cast<double>(eligible) : 0.0)};
}

Outcome criterion7() {
    const auto tree = tree_from_json(nlohmann::json::parse(fixture("tree.json")));
    const auto regions = RegionPolygons::from_geojson(nlohmann::json::parse(fixture("regions.geojson")), &tree);
    std::istringstream rin(fixture("records.jsonl"));
    auto records = read_records(rin);
    IngestConfig cfg;
    std::istringstream sin(fixture("stoplist.txt"));
    cfg.stoplist = read_stoplist(sin);
    cfg.min_distinct_users = 3;
    const auto expected_doc = nlohmann::json::parse(fixture("expected_counts.json"));
    const auto [vocab, counts] = counts_from_json(expected_doc);

    const auto result = ingest(records, tree, &regions, cfg);
    const bool exact = result.vocabulary == vocab && result.counts == counts &&
                       stats_to_json(result.stats) == expected_doc.at("stats");
    const bool exercised = result.stats.duplicate_occurrences >= 1 && result.stats.records_below_accuracy >= 1 &&
                           result.stats.rare_terms >= 1;
    std::mt19937 gen(7);
    int invariant = 0;
    for (int i = 0; i < 200; ++i) {
        std::shuffle(records.begin(), records.end(), gen);
        const auto again = ingest(records, tree, &regions, cfg);
        invariant += again.vocabulary == result.vocabulary && again.counts == result.counts &&
                     again.stats == result.stats;
    }
    return {records.size() == 12 && exact && exercised && invariant == 200,
            format("%zu records: exact counts %s, dedup/accuracy/rare filters exercised %s, %d/200 permutations "
                   "identical",
                   records.size(), exact ? "yes" : "no", exercised ? "yes" : "no", invariant)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int n, const Outcome& o) {
        std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    const auto wide = table_four(6.0);
    report(1, criterion1(wide));
    report(2, criterion2(wide, table_four(4.0)));
    report(3, criterion3());
    report(4, criterion4());
    report(5, criterion5());
    report(6, criterion6());
    report(7, criterion7());
    std::printf("%d of 7 criteria passed\n", 7 - failures);
    return failures ? 1 : 0;
}
