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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"

#include "ghm/random.hpp"

using namespace ghm;

TEST_CASE("engine output is the standard mt19937_64 sequence") {
    Rng rng(5489);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) {
        x = rng.next_u64();
    }
    CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("derived seeds are deterministic and distinct") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(42, i));
    }
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("uniform draws stay in range and match the first two moments") {
    Rng rng(1);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(rng.uniform_open() > 0.0);
        sum += u;
        sq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("below covers its range evenly") {
    Rng rng(2);
    std::vector<int> hist(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.below(7);
        REQUIRE(k < 7);
        ++hist[k];
    }
    for (int h : hist) {
        CHECK(std::abs(h - n / 7) < 500);
    }
}

TEST_CASE("normal draws have zero mean and unit variance") {
    Rng rng(3);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gamma draws match mean and variance for large and small shapes") {
    for (double shape : {0.1, 0.7, 1.0, 2.5, 40.0}) {
        CAPTURE(shape);
        Rng rng(4);
        const int n = 200000;
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = std::exp(rng.log_gamma_draw(shape));
            sum += g;
            sq += g * g;
        }
        const double mean = sum / n;
        CHECK(mean == doctest::Approx(shape).epsilon(0.03));
        CHECK(sq / n - mean * mean == doctest::Approx(shape).epsilon(0.06));
    }
}

TEST_CASE("dirichlet vectors lie on the simplex with the expected mean") {
    Rng rng(5);
    const std::size_t dim = 5;
    std::vector<double> mean(dim, 0.0);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto p = rng.dirichlet(dim, 0.3);
        REQUIRE(p.size() == dim);
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t k = 0; k < dim; ++k) {
            REQUIRE(p[k] >= 0.0);
            mean[k] += p[k] / n;
        }
    }
    for (double m : mean) {
        CHECK(m == doctest::Approx(0.2).epsilon(0.03));
    }
}

TEST_CASE("sparse dirichlet over a large support still sums to one") {
    Rng rng(6);
    const auto p = rng.dirichlet(7936, 0.1);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const double top = *std::max_element(p.begin(), p.end());
    CHECK(top > 10.0 / 7936.0);
}

TEST_CASE("alias table reproduces its weights") {
    const std::vector<double> w{0.5, 0.0, 2.0, 1.5, 1.0};
    AliasTable table(w);
    CHECK(table.size() == w.size());
    Rng rng(7);
    std::vector<int> hist(w.size(), 0);
    const int n = 500000;
    for (int i = 0; i < n; ++i) {
        ++hist[table.sample(rng)];
    }
    CHECK(hist[1] == 0);
    for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(static_cast<double>(hist[k]) / n == doctest::Approx(w[k] / 5.0).epsilon(0.02));
    }
}

TEST_CASE("categorical sampling by inverse cdf") {
    const std::vector<double> w{3.0, 1.0};
    Rng rng(8);
    int first = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        first += sample_categorical(rng, w) == 0;
    }
    CHECK(static_cast<double>(first) / n == doctest::Approx(0.75).epsilon(0.01));
    const std::vector<double> one{0.0, 0.0, 4.0};
    CHECK(sample_categorical(rng, one) == 2);
}

TEST_CASE("same seed, same stream") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.normal() == b.normal());
        CHECK(a.log_gamma_draw(0.1) == b.log_gamma_draw(0.1));
    }
    CHECK(a.dirichlet(10, 1.0) == b.dirichlet(10, 1.0));
}
