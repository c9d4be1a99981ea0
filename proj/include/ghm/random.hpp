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

#ifndef GHM_RANDOM_HPP
#define GHM_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ghm {

// Portable sampling primitives.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The std:: distributions are not (their algorithms are left to
// the library vendor), so every distribution used for corpus generation is
// implemented here on top of raw engine output. Same seed, same bits, on any
// conforming platform.

/// SplitMix64 step; used to derive independent sub-seeds from one seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic child seed `index` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform in (0, 1); safe to take the log of.
    double uniform_open();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal (Marsaglia polar method).
    double normal();

    /// log of a Gamma(shape, 1) draw. Working in log space keeps small-shape
    /// draws (shape 0.1 routinely yields values below 1e-300) representable.
    double log_gamma_draw(double shape);

    /// Symmetric Dirichlet(concentration) over `dim` categories.
    std::vector<double> dirichlet(std::size_t dim, double concentration);

private:
    std::mt19937_64 engine_;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Walker/Vose alias table for O(1) categorical draws.
class AliasTable {
public:
    AliasTable() = default;
    explicit AliasTable(std::span<const double> weights);

    std::size_t sample(Rng& rng) const;
    std::size_t size() const { return prob_.size(); }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

/// Index drawn from unnormalized `weights` by inverse CDF (small supports).
std::size_t sample_categorical(Rng& rng, std::span<const double> weights);

}  // namespace ghm

#endif  // GHM_RANDOM_HPP
