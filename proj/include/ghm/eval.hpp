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

#ifndef GHM_EVAL_HPP
#define GHM_EVAL_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ghm/model.hpp"
#include "ghm/synth.hpp"

namespace ghm {

enum class Method { random, nb, ht, ghm };

std::string_view method_name(Method m);
/// Throws InvalidArgument.
Method parse_method(std::string_view name);

struct EvalConfig {
    GenConfig gen;
    std::size_t trials = 50;
    double holdout = 0.10;
    std::vector<Method> methods{Method::random, Method::nb, Method::ht, Method::ghm};
    EmConfig em;
    /// NB pseudo-count; unset means em.alpha_smooth.
    std::optional<double> nb_smoothing;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Held-out instances keep their true level; training counts do not.
struct Split {
    CountMatrix train;
    std::vector<LabeledTriple> test;
    std::uint64_t test_instances = 0;
};

/// Instance-level split: exactly round(fraction * total) instances, chosen
/// uniformly without replacement, go to the test side. Throws
/// InvalidFraction, EmptyTestSet.
Split split(const LabeledCorpus& corpus, double fraction, std::uint64_t seed);

/// Fraction of test instances whose predicted level equals the true one.
using LevelClassifier = std::function<std::size_t(TagIndex, NodeIndex)>;
double accuracy(const Split& split, const LevelClassifier& classify);

struct MethodReport {
    Method method;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation over trials
    std::vector<double> accuracies;  // in trial order
    double seconds = 0.0;  // train + classify, summed over trials
};

struct EvalReport {
    std::vector<MethodReport> methods;
    std::size_t trials = 0;
    std::vector<std::size_t> ghm_iterations;  // per trial, when ghm ran
    std::vector<std::uint64_t> test_instances;  // per trial
    double seconds = 0.0;
    nlohmann::json config;

    const MethodReport& method(Method m) const;
};

EvalReport run_eval(const EvalConfig& cfg);

nlohmann::json report_to_json(const EvalReport& report);
/// Aligned text table: method, mean accuracy and (std).
std::string report_table(const EvalReport& report);

/// Mean and sample standard deviation, reduced over a sorted copy so the
/// result does not depend on input order.
std::pair<double, double> mean_std(std::vector<double> values);

}  // namespace ghm

#endif  // GHM_EVAL_HPP
