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

#include "ghm/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "ghm/baselines.hpp"
#include "ghm/error.hpp"
#include "ghm/random.hpp"

namespace ghm {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::random: return "random";
        case Method::nb: return "nb";
        case Method::ht: return "ht";
        case Method::ghm: return "ghm";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (auto m : {Method::random, Method::nb, Method::ht, Method::ghm}) {
        if (method_name(m) == name) {
            return m;
        }
    }
    throw Error("InvalidArgument", "unknown method '" + std::string(name) + "'");
}

void EvalConfig::validate() const {
    gen.validate();
    em.validate();
    if (trials < 1) {
        throw Error("InvalidConfig", "trials must be at least 1");
    }
    if (!(holdout > 0.0 && holdout < 1.0)) {
        throw Error("InvalidFraction", "holdout must lie strictly between 0 and 1");
    }
    if (methods.empty()) {
        throw Error("InvalidConfig", "no methods selected");
    }
    if (nb_smoothing && !(*nb_smoothing > 0.0)) {
        throw Error("InvalidConfig", "NB smoothing must be positive");
    }
}

Split split(const LabeledCorpus& corpus, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw Error("InvalidFraction", "holdout fraction must lie strictly between 0 and 1");
    }
    std::uint64_t total = 0;
    for (const auto& x : corpus.triples) {
        total += x.count;
    }
    const auto wanted = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(total)));
    if (wanted < 1) {
        throw Error("EmptyTestSet", "holdout of " + std::to_string(fraction) + " leaves no test instance");
    }

    // Selection sampling (Knuth's Algorithm S) over the instances in triple
    // order: exactly `wanted` picks, every subset equally likely.
    Rng rng(seed);
    Split out;
    std::vector<std::vector<CountEntry>> rows(corpus.tree.leaves().size());
    std::uint64_t remaining = total;
    std::uint64_t needed = wanted;
    for (const auto& x : corpus.triples) {
        std::uint64_t picked = 0;
        for (std::uint64_t i = 0; i < x.count; ++i) {
            if (needed > 0 && static_cast<double>(remaining) * rng.uniform() < static_cast<double>(needed)) {
                ++picked;
                --needed;
            }
            --remaining;
        }
        if (picked) {
            out.test.push_back({x.leaf, x.tag, x.level, picked});
        }
        if (x.count > picked) {
            rows[corpus.tree.leaf_position(x.leaf)].push_back({x.tag, x.count - picked});
        }
    }
    out.test_instances = wanted;

    std::vector<std::string> leaf_ids;
    for (auto leaf : corpus.tree.leaves()) {
        leaf_ids.push_back(corpus.tree.id(leaf));
    }
    out.train = CountMatrix(std::move(leaf_ids), corpus.vocab_size, std::move(rows));
    return out;
}

double accuracy(const Split& split, const LevelClassifier& classify) {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;
    for (const auto& x : split.test) {
        if (classify(x.tag, x.leaf) == x.level) {
            correct += x.count;
        }
        total += x.count;
    }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

std::pair<double, double> mean_std(std::vector<double> values) {
    if (values.empty()) {
        return {0.0, 0.0};
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0))};
}

const MethodReport& EvalReport::method(Method m) const {
    for (const auto& r : methods) {
        if (r.method == m) {
            return r;
        }
    }
    throw Error("InvalidArgument", "method '" + std::string(method_name(m)) + "' was not evaluated");
}

namespace {

struct TrialResult {
    std::vector<double> accuracy;  // aligned with cfg.methods
    std::vector<double> seconds;
    std::size_t ghm_iterations = 0;
    std::uint64_t test_instances = 0;
};

TrialResult run_trial(const EvalConfig& cfg, std::size_t trial) {
    using clock = std::chrono::steady_clock;
    const std::uint64_t trial_seed = derive_seed(cfg.seed, trial);

    GenConfig gen = cfg.gen;
    gen.seed = derive_seed(trial_seed, 0);
    const auto corpus = generate(gen);
    const auto data = split(corpus, cfg.holdout, derive_seed(trial_seed, 1));
    const auto& tree = corpus.tree;

    TrialResult result;
    result.test_instances = data.test_instances;
    for (auto method : cfg.methods) {
        const auto start = clock::now();
        double acc = 0.0;
        switch (method) {
            case Method::random: {
                Rng rng(derive_seed(trial_seed, 3));
                std::uint64_t correct = 0, total = 0;
                for (const auto& x : data.test) {
                    const auto levels = tree.path(x.leaf).size();
                    for (std::uint64_t i = 0; i < x.count; ++i) {
                        correct += (rng.below(levels) + 1 == x.level);
                    }
                    total += x.count;
                }
                acc = static_cast<double>(correct) / static_cast<double>(total);
                break;
            }
            case Method::nb: {
                const auto model = nb_train(data.train, tree, cfg.nb_smoothing.value_or(cfg.em.alpha_smooth));
                acc = accuracy(data, [&](TagIndex t, NodeIndex leaf) {
                    return level_of(tree, nb_classify(model, t, leaf));
                });
                break;
            }
            case Method::ht: {
                const auto model = ht_train(data.train, tree);
                acc = accuracy(data, [&](TagIndex t, NodeIndex leaf) {
                    return level_of(tree, ht_classify(model, t, leaf).node);
                });
                break;
            }
            case Method::ghm: {
                EmConfig em = cfg.em;
                em.seed = derive_seed(trial_seed, 2);
                const auto model = train(data.train, tree, em);
                result.ghm_iterations = model.training().iterations;
                acc = accuracy(data, [&](TagIndex t, NodeIndex leaf) {
                    return level_of(tree, model.classify(t, leaf));
                });
                break;
            }
        }
        result.accuracy.push_back(acc);
        result.seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
    }
    return result;
}

}  // namespace

EvalReport run_eval(const EvalConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    std::vector<TrialResult> results(cfg.trials);
    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, cfg.trials));
    if (workers == 1) {
        for (std::size_t i = 0; i < cfg.trials; ++i) {
            results[i] = run_trial(cfg, i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < cfg.trials;) {
                    try {
                        results[i] = run_trial(cfg, i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    EvalReport report;
    report.trials = cfg.trials;
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        MethodReport r{cfg.methods[m], 0.0, 0.0, {}, 0.0};
        for (const auto& trial : results) {
            r.accuracies.push_back(trial.accuracy[m]);
            r.seconds += trial.seconds[m];
        }
        std::tie(r.mean, r.std) = mean_std(r.accuracies);
        report.methods.push_back(std::move(r));
    }
    const bool has_ghm = std::find(cfg.methods.begin(), cfg.methods.end(), Method::ghm) != cfg.methods.end();
    for (const auto& trial : results) {
        if (has_ghm) {
            report.ghm_iterations.push_back(trial.ghm_iterations);
        }
        report.test_instances.push_back(trial.test_instances);
    }

    std::vector<std::string> names;
    for (auto m : cfg.methods) {
        names.emplace_back(method_name(m));
    }
    report.config = {{"generator", gen_config_to_json(cfg.gen)},
                     {"trials", cfg.trials},
                     {"holdout", cfg.holdout},
                     {"methods", names},
                     {"em", em_config_to_json(cfg.em)},
                     {"nb_smoothing", cfg.nb_smoothing.value_or(cfg.em.alpha_smooth)},
                     {"seed", cfg.seed}};
    report.config["generator"].erase("seed");
    report.config["em"].erase("seed");
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    auto methods = nlohmann::json::array();
    for (const auto& r : report.methods) {
        methods.push_back({{"method", method_name(r.method)},
                           {"mean", r.mean},
                           {"std", r.std},
                           {"accuracies", r.accuracies}});
    }
    nlohmann::json doc{{"version", "ghm-eval/1"},
                       {"config", report.config},
                       {"trials", report.trials},
                       {"methods", std::move(methods)},
                       {"test_instances", report.test_instances}};
    if (!report.ghm_iterations.empty()) {
        doc["ghm_iterations"] = report.ghm_iterations;
    }
    return doc;
}

std::string report_table(const EvalReport& report) {
    auto label = [](Method m) -> std::string {
        switch (m) {
            case Method::random: return "Random";
            case Method::nb: return "NB";
            case Method::ht: return "HT";
            case Method::ghm: return "GHM";
        }
        return "?";
    };
    const std::string rule = "--------+-------------------------------\n";
    std::string out = "        | Classification Accuracy (std)\n" + rule;
    char line[128];
    // Baselines first, the model below a separator.
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& r : report.methods) {
            if ((r.method == Method::ghm) != (pass == 1)) {
                continue;
            }
            std::snprintf(line, sizeof line, "%7s | %.4f (%.4f)\n", label(r.method).c_str(), r.mean, r.std);
            out += line;
        }
        if (pass == 0) {
            out += rule;
        }
    }
    char footer[96];
    std::snprintf(footer, sizeof footer, "(%zu trials)\n", report.trials);
    return out + footer;
}

}  // namespace ghm
