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

#ifndef GHM_POLYGON_HPP
#define GHM_POLYGON_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ghm {

class GeoTree;

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

/// Closed ring: front() == back(), at least four vertices.
using Ring = std::vector<LonLat>;

/// Outer ring followed by zero or more holes. Containment is even-odd over
/// all rings, so holes need no special orientation.
struct Polygon {
    std::vector<Ring> rings;
};

/// Leaf region boundaries, keyed by leaf id.
class RegionPolygons {
public:
    /// Adds (or extends) the polygon set of a leaf. Throws MalformedPolygon
    /// on open rings, rings with fewer than 4 vertices or non-finite
    /// coordinates.
    void add(const std::string& leaf_id, std::vector<Polygon> polygons);

    /// The containing leaf, or nullopt. Boundary points count as contained;
    /// when several leaves contain the point the smallest id wins.
    std::optional<std::string> assign(LonLat point) const;

    std::size_t size() const { return regions_.size(); }
    bool contains_leaf(const std::string& leaf_id) const { return regions_.count(leaf_id) != 0; }
    const std::vector<Polygon>& polygons(const std::string& leaf_id) const;

    /// Parses a GeoJSON FeatureCollection whose features carry a "leaf_id"
    /// property and Polygon / MultiPolygon geometries. When `tree` is given,
    /// every leaf_id must name a leaf of it.
    static RegionPolygons from_geojson(const nlohmann::json& doc, const GeoTree* tree = nullptr);

private:
    struct Region {
        std::vector<Polygon> polygons;
        double min_lon, min_lat, max_lon, max_lat;
    };
    // std::map keeps ids sorted, which gives the tie-break for free.
    std::map<std::string, Region> regions_;
};

/// Free-function form of RegionPolygons::assign.
std::optional<std::string> assign_region(LonLat point, const RegionPolygons& polygons);

/// Even-odd test of one polygon; `on_boundary` is set when the point lies
/// on an edge (within 1e-12 degrees).
bool polygon_contains(const Polygon& polygon, LonLat point, bool* on_boundary = nullptr);

}  // namespace ghm

#endif  // GHM_POLYGON_HPP
