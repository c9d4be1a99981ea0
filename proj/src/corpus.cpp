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

#include "ghm/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include "ghm/error.hpp"

namespace ghm {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], static_cast<TagIndex>(i)).second) {
            throw Error("DuplicateTerm", "term '" + terms_[i] + "' appears twice in the vocabulary");
        }
    }
}

Vocabulary Vocabulary::numbered(std::size_t size) {
    std::vector<std::string> terms;
    terms.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        terms.push_back("t" + std::to_string(i));
    }
    return Vocabulary(std::move(terms));
}

const std::string& Vocabulary::term(TagIndex t) const {
    if (t >= terms_.size()) {
        throw Error("UnknownTag", "tag index " + std::to_string(t) + " out of range");
    }
    return terms_[t];
}

std::optional<TagIndex> Vocabulary::find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

TagIndex Vocabulary::index_of(std::string_view term) const {
    auto t = find(term);
    if (!t) {
        throw Error("UnknownTag", "tag '" + std::string(term) + "' is not in the vocabulary");
    }
    return *t;
}

// ---------------------------------------------------------------------------
// CountMatrix

CountMatrix::CountMatrix(std::vector<std::string> leaf_ids, std::size_t vocab_size,
                         std::vector<std::vector<CountEntry>> rows)
    : leaf_ids_(std::move(leaf_ids)), vocab_size_(vocab_size), rows_(std::move(rows)) {
    if (rows_.size() != leaf_ids_.size()) {
        rows_.resize(leaf_ids_.size());
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : leaf_ids_) {
        if (!seen.insert(id).second) {
            throw Error("DuplicateLeaf", "leaf '" + id + "' has two rows");
        }
    }
    row_totals_.assign(rows_.size(), 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        auto& row = rows_[r];
        std::sort(row.begin(), row.end(),
                  [](const CountEntry& a, const CountEntry& b) { return a.tag < b.tag; });
        std::vector<CountEntry> merged;
        merged.reserve(row.size());
        for (const auto& e : row) {
            if (e.tag >= vocab_size_) {
                throw Error("UnknownTag", "tag index " + std::to_string(e.tag) +
                                              " exceeds vocabulary size " + std::to_string(vocab_size_));
            }
            if (e.count == 0) {
                continue;
            }
            if (!merged.empty() && merged.back().tag == e.tag) {
                merged.back().count += e.count;
            } else {
                merged.push_back(e);
            }
        }
        row = std::move(merged);
        for (const auto& e : row) {
            row_totals_[r] += e.count;
        }
        total_ += row_totals_[r];
        nnz_ += row.size();
    }
}

CountMatrix CountMatrix::empty_for(const GeoTree& tree, std::size_t vocab_size) {
    std::vector<std::string> ids;
    for (auto leaf : tree.leaves()) {
        ids.push_back(tree.id(leaf));
    }
    return CountMatrix(std::move(ids), vocab_size, {});
}

std::optional<std::size_t> CountMatrix::row_of(std::string_view leaf_id) const {
    for (std::size_t r = 0; r < leaf_ids_.size(); ++r) {
        if (leaf_ids_[r] == leaf_id) {
            return r;
        }
    }
    return std::nullopt;
}

std::uint64_t CountMatrix::at(std::size_t r, TagIndex t) const {
    const auto& row = rows_.at(r);
    auto it = std::lower_bound(row.begin(), row.end(), t,
                               [](const CountEntry& e, TagIndex tag) { return e.tag < tag; });
    return (it != row.end() && it->tag == t) ? it->count : 0;
}

bool CountMatrix::operator==(const CountMatrix& other) const {
    return leaf_ids_ == other.leaf_ids_ && vocab_size_ == other.vocab_size_ && rows_ == other.rows_;
}

std::vector<std::size_t> align_rows(const CountMatrix& counts, const GeoTree& tree) {
    if (counts.rows() != tree.leaves().size()) {
        throw Error("LeafSetMismatch", "count matrix has " + std::to_string(counts.rows()) +
                                           " rows but the tree has " +
                                           std::to_string(tree.leaves().size()) + " leaves");
    }
    std::unordered_map<std::string_view, std::size_t> rows;
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        rows.emplace(counts.leaf_id(r), r);
    }
    std::vector<std::size_t> out;
    out.reserve(tree.leaves().size());
    for (auto leaf : tree.leaves()) {
        auto it = rows.find(tree.id(leaf));
        if (it == rows.end()) {
            throw Error("LeafSetMismatch", "tree leaf '" + tree.id(leaf) + "' has no count row");
        }
        out.push_back(it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Records

namespace {

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    const sys_days day = year{y} / month{m} / std::chrono::day{d};
    return day.time_since_epoch().count();
}

std::int64_t parse_iso8601(const std::string& text) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0;
    double s = 0.0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2u%n", &y, &mo, &d, &consumed) != 3) {
        throw Error("InvalidRecord", "unparseable timestamp '" + text + "'");
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw Error("InvalidRecord", "invalid calendar date in '" + text + "'");
    }
    std::int64_t seconds = days_from_civil(y, mo, d) * 86400;
    std::string rest = text.substr(static_cast<std::size_t>(consumed));
    if (rest.empty()) {
        return seconds;
    }
    int more = 0;
    if ((rest[0] != 'T' && rest[0] != ' ') ||
        std::sscanf(rest.c_str() + 1, "%2u:%2u:%lf%n", &h, &mi, &s, &more) != 3 || h > 23 ||
        mi > 59 || s < 0.0 || s >= 61.0) {
        throw Error("InvalidRecord", "unparseable time of day in '" + text + "'");
    }
    seconds += static_cast<std::int64_t>(h) * 3600 + mi * 60 + static_cast<std::int64_t>(std::floor(s));
    std::string zone = rest.substr(1 + static_cast<std::size_t>(more));
    if (zone.empty() || zone == "Z") {
        return seconds;
    }
    unsigned zh = 0, zm = 0;
    if ((zone[0] != '+' && zone[0] != '-') ||
        std::sscanf(zone.c_str() + 1, "%2u:%2u", &zh, &zm) != 2) {
        throw Error("InvalidRecord", "unparseable UTC offset in '" + text + "'");
    }
    const std::int64_t offset = static_cast<std::int64_t>(zh) * 3600 + zm * 60;
    return zone[0] == '+' ? seconds - offset : seconds + offset;
}

std::string scalar_text(const nlohmann::json& v, const char* field) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<std::int64_t>());
    }
    throw Error("InvalidRecord", std::string("field \"") + field + "\" must be a string or integer");
}

}  // namespace

std::int64_t utc_day(std::int64_t timestamp) {
    return timestamp >= 0 ? timestamp / 86400 : -((-timestamp + 86399) / 86400);
}

GeoRecord record_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error("InvalidRecord", "record must be a JSON object");
    }
    GeoRecord rec;
    if (!doc.contains("user")) {
        throw Error("InvalidRecord", "record lacks \"user\"");
    }
    rec.id = doc.contains("id") ? scalar_text(doc["id"], "id") : std::string();
    rec.user = scalar_text(doc["user"], "user");

    if (!doc.contains("ts")) {
        throw Error("InvalidRecord", "record '" + rec.id + "' lacks \"ts\"");
    }
    const auto& ts = doc["ts"];
    if (ts.is_number_integer()) {
        rec.timestamp = ts.get<std::int64_t>();
    } else if (ts.is_number()) {
        rec.timestamp = static_cast<std::int64_t>(std::floor(ts.get<double>()));
    } else if (ts.is_string()) {
        rec.timestamp = parse_iso8601(ts.get<std::string>());
    } else {
        throw Error("InvalidRecord", "record '" + rec.id + "' has a malformed \"ts\"");
    }

    const bool has_lon = doc.contains("lon") && !doc["lon"].is_null();
    const bool has_lat = doc.contains("lat") && !doc["lat"].is_null();
    if (has_lon != has_lat) {
        throw Error("InvalidRecord", "record '" + rec.id + "' needs both lon and lat");
    }
    if (has_lon) {
        if (!doc["lon"].is_number() || !doc["lat"].is_number()) {
            throw Error("InvalidRecord", "record '" + rec.id + "' has non-numeric coordinates");
        }
        LonLat p{doc["lon"].get<double>(), doc["lat"].get<double>()};
        if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
            throw Error("InvalidRecord", "record '" + rec.id + "' has out-of-range coordinates");
        }
        rec.location = p;
    }
    if (doc.contains("leaf") && !doc["leaf"].is_null()) {
        rec.leaf = scalar_text(doc["leaf"], "leaf");
    }

    if (doc.contains("accuracy")) {
        if (!doc["accuracy"].is_number_integer()) {
            throw Error("InvalidRecord", "record '" + rec.id + "' has a non-integer accuracy");
        }
        rec.accuracy = doc["accuracy"].get<int>();
    }
    if (doc.contains("tags")) {
        if (!doc["tags"].is_array()) {
            throw Error("InvalidRecord", "record '" + rec.id + "' has non-array \"tags\"");
        }
        for (const auto& tag : doc["tags"]) {
            if (!tag.is_string()) {
                throw Error("InvalidRecord", "record '" + rec.id + "' has a non-string tag");
            }
            rec.tags.push_back(tag.get<std::string>());
        }
    }
    return rec;
}

std::vector<GeoRecord> read_records(std::istream& in) {
    std::vector<GeoRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("InvalidRecord", "line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            out.push_back(record_from_json(doc));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization

std::optional<std::string> DefaultNormalizer::normalize(std::string_view raw) const {
    auto text = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
    text.trim();
    text.toLower(icu::Locale::getRoot());
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw Error("NormalizerFailure", u_errorName(status));
    }
    icu::UnicodeString composed = nfc->normalize(text, status);
    if (U_FAILURE(status)) {
        throw Error("NormalizerFailure", u_errorName(status));
    }
    if (composed.isEmpty()) {
        return std::nullopt;
    }
    std::string out;
    composed.toUTF8String(out);
    return out;
}

std::unordered_set<std::string> read_stoplist(std::istream& in) {
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        out.insert(line.substr(first, last - first + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion

nlohmann::json stats_to_json(const IngestStats& s) {
    return {{"records_in", s.records_in},
            {"records_below_accuracy", s.records_below_accuracy},
            {"records_unresolved", s.records_unresolved},
            {"records_kept", s.records_kept},
            {"tag_occurrences", s.tag_occurrences},
            {"tags_normalized_away", s.tags_normalized_away},
            {"duplicate_occurrences", s.duplicate_occurrences},
            {"rare_tag_occurrences", s.rare_tag_occurrences},
            {"rare_terms", s.rare_terms},
            {"vocabulary_size", s.vocabulary_size},
            {"counted", s.counted}};
}

IngestResult ingest(std::span<const GeoRecord> records, const GeoTree& tree,
                    const RegionPolygons* polygons, const IngestConfig& cfg) {
    static const DefaultNormalizer default_normalizer;
    const TagNormalizer& normalizer = cfg.normalizer ? *cfg.normalizer : default_normalizer;

    std::unordered_set<std::string> stoplist;
    for (const auto& term : cfg.stoplist) {
        if (auto norm = normalizer.normalize(term)) {
            stoplist.insert(*norm);
        }
    }

    struct TermInfo {
        std::unordered_set<std::string> users;
        std::map<std::size_t, std::uint64_t> per_leaf;  // leaf position -> deduped count
    };
    std::map<std::string, TermInfo> terms;
    std::unordered_set<std::string> seen_keys;

    IngestStats stats;
    for (const auto& rec : records) {
        ++stats.records_in;
        if (rec.accuracy < cfg.min_accuracy) {
            ++stats.records_below_accuracy;
            continue;
        }
        std::optional<std::string> leaf_id = rec.leaf;
        if (!leaf_id && rec.location && polygons) {
            leaf_id = polygons->assign(*rec.location);
        }
        std::optional<NodeIndex> leaf;
        if (leaf_id) {
            leaf = tree.find(*leaf_id);
        }
        if (!leaf || !tree.is_leaf(*leaf)) {
            ++stats.records_unresolved;
            continue;
        }
        ++stats.records_kept;
        const std::size_t leaf_pos = tree.leaf_position(*leaf);
        const std::int64_t day = utc_day(rec.timestamp);

        for (const auto& raw : rec.tags) {
            ++stats.tag_occurrences;
            auto term = normalizer.normalize(raw);
            if (!term || stoplist.count(*term)) {
                ++stats.tags_normalized_away;
                continue;
            }
            std::string key = rec.user;
            key += '\x1f';
            key += *term;
            key += '\x1f';
            key += std::to_string(leaf_pos);
            key += '\x1f';
            key += std::to_string(day);
            if (!seen_keys.insert(std::move(key)).second) {
                ++stats.duplicate_occurrences;
                continue;
            }
            auto& info = terms[*term];
            info.users.insert(rec.user);
            ++info.per_leaf[leaf_pos];
        }
    }

    std::vector<std::string> kept;
    for (const auto& [term, info] : terms) {
        if (info.users.size() < cfg.min_distinct_users) {
            ++stats.rare_terms;
            for (const auto& [leaf_pos, count] : info.per_leaf) {
                stats.rare_tag_occurrences += count;
            }
            continue;
        }
        kept.push_back(term);
    }
    // std::map iteration already yields sorted terms.
    std::vector<std::vector<CountEntry>> rows(tree.leaves().size());
    for (TagIndex t = 0; t < kept.size(); ++t) {
        for (const auto& [leaf_pos, count] : terms[kept[t]].per_leaf) {
            rows[leaf_pos].push_back({t, count});
            stats.counted += count;
        }
    }
    stats.vocabulary_size = kept.size();

    std::vector<std::string> leaf_ids;
    for (auto leaf : tree.leaves()) {
        leaf_ids.push_back(tree.id(leaf));
    }
    const std::size_t vocab_size = kept.size();
    return IngestResult{Vocabulary(std::move(kept)),
                        CountMatrix(std::move(leaf_ids), vocab_size, std::move(rows)), stats};
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json counts_to_json(const Vocabulary& vocab, const CountMatrix& counts) {
    if (vocab.size() != counts.vocab_size()) {
        throw Error("VocabularyMismatch", "vocabulary and count matrix disagree on size");
    }
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        auto entries = nlohmann::json::array();
        for (const auto& e : counts.row(r)) {
            entries.push_back({e.tag, e.count});
        }
        rows.push_back({{"leaf", counts.leaf_id(r)}, {"counts", std::move(entries)}});
    }
    return {{"version", "ghm-counts/1"},
            {"vocabulary", std::vector<std::string>(vocab.terms().begin(), vocab.terms().end())},
            {"rows", std::move(rows)}};
}

std::pair<Vocabulary, CountMatrix> counts_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("version", "") != "ghm-counts/1") {
        throw Error("InvalidCountsFile", "expected a \"ghm-counts/1\" document");
    }
    try {
        Vocabulary vocab(doc.at("vocabulary").get<std::vector<std::string>>());
        std::vector<std::string> leaf_ids;
        std::vector<std::vector<CountEntry>> rows;
        for (const auto& row : doc.at("rows")) {
            leaf_ids.push_back(row.at("leaf").get<std::string>());
            auto& entries = rows.emplace_back();
            for (const auto& e : row.at("counts")) {
                entries.push_back({e.at(0).get<TagIndex>(), e.at(1).get<std::uint64_t>()});
            }
        }
        const auto size = vocab.size();
        return {std::move(vocab), CountMatrix(std::move(leaf_ids), size, std::move(rows))};
    } catch (const nlohmann::json::exception& e) {
        throw Error("InvalidCountsFile", e.what());
    }
}

}  // namespace ghm
