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

#ifndef GHM_CORPUS_HPP
#define GHM_CORPUS_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "ghm/geotree.hpp"
#include "ghm/polygon.hpp"

namespace ghm {

using TagIndex = std::uint32_t;

/// Bijection between tag text and dense indices 0..size()-1.
class Vocabulary {
public:
    Vocabulary() = default;
    /// Throws DuplicateTerm.
    explicit Vocabulary(std::vector<std::string> terms);

    /// "t0", "t1", ... for generated corpora.
    static Vocabulary numbered(std::size_t size);

    std::size_t size() const { return terms_.size(); }
    const std::string& term(TagIndex t) const;
    std::optional<TagIndex> find(std::string_view term) const;
    /// Throws UnknownTag.
    TagIndex index_of(std::string_view term) const;
    std::span<const std::string> terms() const { return terms_; }

    bool operator==(const Vocabulary& other) const { return terms_ == other.terms_; }

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, TagIndex> index_;
};

struct CountEntry {
    TagIndex tag;
    std::uint64_t count;

    bool operator==(const CountEntry&) const = default;
};

/// Sparse leaf x tag count matrix. Rows are sorted by tag, hold only
/// positive counts, and are immutable once built.
class CountMatrix {
public:
    CountMatrix() = default;
    /// Entries may arrive unsorted and with repeated tags; they are merged.
    /// Throws DuplicateLeaf, UnknownTag (tag >= vocab_size).
    CountMatrix(std::vector<std::string> leaf_ids, std::size_t vocab_size,
                std::vector<std::vector<CountEntry>> rows);

    /// All-zero matrix over the leaves of `tree`.
    static CountMatrix empty_for(const GeoTree& tree, std::size_t vocab_size);

    std::size_t rows() const { return leaf_ids_.size(); }
    std::size_t vocab_size() const { return vocab_size_; }
    std::span<const CountEntry> row(std::size_t r) const { return rows_.at(r); }
    const std::string& leaf_id(std::size_t r) const { return leaf_ids_.at(r); }
    std::span<const std::string> leaf_ids() const { return leaf_ids_; }
    std::optional<std::size_t> row_of(std::string_view leaf_id) const;

    std::uint64_t at(std::size_t r, TagIndex t) const;
    std::uint64_t row_total(std::size_t r) const { return row_totals_.at(r); }
    std::uint64_t total() const { return total_; }
    std::size_t nnz() const { return nnz_; }

    bool operator==(const CountMatrix& other) const;

private:
    std::vector<std::string> leaf_ids_;
    std::size_t vocab_size_ = 0;
    std::vector<std::vector<CountEntry>> rows_;
    std::vector<std::uint64_t> row_totals_;
    std::uint64_t total_ = 0;
    std::size_t nnz_ = 0;
};

/// For each leaf of `tree` (in tree leaf order), the matching row of
/// `counts`. Throws LeafSetMismatch unless both leaf sets are identical.
std::vector<std::size_t> align_rows(const CountMatrix& counts, const GeoTree& tree);

/// One geotagged, tagged item (e.g. a photo).
struct GeoRecord {
    std::string id;
    std::string user;
    std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
    std::optional<LonLat> location;
    std::optional<std::string> leaf;  // pre-resolved leaf id
    int accuracy = 0;
    std::vector<std::string> tags;
};

/// Parses one JSON-lines record. "ts" may be epoch seconds or an ISO-8601
/// string ("2013-05-04", "2013-05-04T10:00:00Z", "...+02:00").
/// Throws InvalidRecord.
GeoRecord record_from_json(const nlohmann::json& doc);
/// Reads a whole JSON-lines stream; blank lines are skipped.
std::vector<GeoRecord> read_records(std::istream& in);

/// UTC calendar day number (days since 1970-01-01).
std::int64_t utc_day(std::int64_t timestamp);

/// Maps raw tag text to its canonical form. nullopt drops the tag.
class TagNormalizer {
public:
    virtual ~TagNormalizer() = default;
    virtual std::optional<std::string> normalize(std::string_view raw) const = 0;
};

/// Trim, Unicode lowercase and NFC composition (via ICU). No stemming.
class DefaultNormalizer : public TagNormalizer {
public:
    std::optional<std::string> normalize(std::string_view raw) const override;
};

/// One term per line; '#' starts a comment line.
std::unordered_set<std::string> read_stoplist(std::istream& in);

struct IngestConfig {
    std::unordered_set<std::string> stoplist;
    /// Records with accuracy below this are dropped (1 = world .. 16 = street).
    int min_accuracy = 13;
    /// Tags used by fewer distinct users (globally) are dropped.
    std::size_t min_distinct_users = 10;
    /// nullptr selects DefaultNormalizer.
    std::shared_ptr<const TagNormalizer> normalizer;
};

struct IngestStats {
    std::uint64_t records_in = 0;
    std::uint64_t records_below_accuracy = 0;
    std::uint64_t records_unresolved = 0;
    std::uint64_t records_kept = 0;
    std::uint64_t tag_occurrences = 0;      // raw tags on kept records
    std::uint64_t tags_normalized_away = 0; // empty after normalization or stoplisted
    std::uint64_t duplicate_occurrences = 0;
    std::uint64_t rare_tag_occurrences = 0;
    std::uint64_t rare_terms = 0;
    std::uint64_t vocabulary_size = 0;
    std::uint64_t counted = 0;

    bool operator==(const IngestStats&) const = default;
};

nlohmann::json stats_to_json(const IngestStats& stats);

struct IngestResult {
    Vocabulary vocabulary;
    CountMatrix counts;
    IngestStats stats;
};

/// Filtering pipeline, in order: accuracy threshold, region resolution,
/// tag normalization + stoplist, (user, tag, leaf, UTC day) dedup, rare-tag
/// removal. The vocabulary is sorted, so the result does not depend on
/// record order. `polygons` may be null when every record carries a leaf.
IngestResult ingest(std::span<const GeoRecord> records, const GeoTree& tree,
                    const RegionPolygons* polygons, const IngestConfig& cfg);

nlohmann::json counts_to_json(const Vocabulary& vocab, const CountMatrix& counts);
/// Inverse of counts_to_json.
std::pair<Vocabulary, CountMatrix> counts_from_json(const nlohmann::json& doc);

}  // namespace ghm

#endif  // GHM_CORPUS_HPP
