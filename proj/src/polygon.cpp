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

#include "ghm/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghm/error.hpp"
#include "ghm/geotree.hpp"

namespace ghm {

namespace {

constexpr double kBoundaryEps = 1e-12;

bool on_segment(LonLat p, LonLat a, LonLat b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
    if (std::abs(cross) > kBoundaryEps * std::max(len, 1.0)) {
        return false;
    }
    return p.lon >= std::min(a.lon, b.lon) - kBoundaryEps &&
           p.lon <= std::max(a.lon, b.lon) + kBoundaryEps &&
           p.lat >= std::min(a.lat, b.lat) - kBoundaryEps &&
           p.lat <= std::max(a.lat, b.lat) + kBoundaryEps;
}

void validate_ring(const std::string& leaf_id, const Ring& ring) {
    if (ring.size() < 4) {
        throw Error("MalformedPolygon", "ring of '" + leaf_id + "' has fewer than 4 vertices");
    }
    for (const auto& v : ring) {
        if (!std::isfinite(v.lon) || !std::isfinite(v.lat)) {
            throw Error("MalformedPolygon", "ring of '" + leaf_id + "' has a non-finite vertex");
        }
    }
    if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat) {
        throw Error("MalformedPolygon", "ring of '" + leaf_id + "' is not closed");
    }
}

Ring ring_from_json(const nlohmann::json& coords) {
    if (!coords.is_array()) {
        throw Error("MalformedPolygon", "ring must be an array of positions");
    }
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw Error("MalformedPolygon", "position must be [lon, lat]");
        }
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    return ring;
}

Polygon polygon_from_json(const nlohmann::json& coords) {
    if (!coords.is_array() || coords.empty()) {
        throw Error("MalformedPolygon", "polygon must be a non-empty array of rings");
    }
    Polygon polygon;
    for (const auto& ring : coords) {
        polygon.rings.push_back(ring_from_json(ring));
    }
    return polygon;
}

}  // namespace

bool polygon_contains(const Polygon& polygon, LonLat point, bool* on_boundary) {
    bool inside = false;
    for (const auto& ring : polygon.rings) {
        for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
            const LonLat a = ring[i];
            const LonLat b = ring[j];
            if (on_boundary && on_segment(point, a, b)) {
                *on_boundary = true;
                return true;
            }
            if ((a.lat > point.lat) != (b.lat > point.lat)) {
                const double x = (b.lon - a.lon) * (point.lat - a.lat) / (b.lat - a.lat) + a.lon;
                if (point.lon < x) {
                    inside = !inside;
                }
            }
        }
    }
    if (on_boundary) {
        *on_boundary = false;
    }
    return inside;
}

void RegionPolygons::add(const std::string& leaf_id, std::vector<Polygon> polygons) {
    for (const auto& polygon : polygons) {
        if (polygon.rings.empty()) {
            throw Error("MalformedPolygon", "polygon of '" + leaf_id + "' has no rings");
        }
        for (const auto& ring : polygon.rings) {
            validate_ring(leaf_id, ring);
        }
    }
    auto [it, inserted] = regions_.try_emplace(leaf_id);
    auto& region = it->second;
    if (inserted) {
        region.min_lon = region.min_lat = std::numeric_limits<double>::infinity();
        region.max_lon = region.max_lat = -std::numeric_limits<double>::infinity();
    }
    for (auto& polygon : polygons) {
        for (const auto& v : polygon.rings.front()) {
            region.min_lon = std::min(region.min_lon, v.lon);
            region.max_lon = std::max(region.max_lon, v.lon);
            region.min_lat = std::min(region.min_lat, v.lat);
            region.max_lat = std::max(region.max_lat, v.lat);
        }
        region.polygons.push_back(std::move(polygon));
    }
}

std::optional<std::string> RegionPolygons::assign(LonLat point) const {
    for (const auto& [leaf_id, region] : regions_) {
        if (point.lon < region.min_lon - kBoundaryEps || point.lon > region.max_lon + kBoundaryEps ||
            point.lat < region.min_lat - kBoundaryEps || point.lat > region.max_lat + kBoundaryEps) {
            continue;
        }
        for (const auto& polygon : region.polygons) {
            bool boundary = false;
            if (polygon_contains(polygon, point, &boundary)) {
                return leaf_id;
            }
        }
    }
    return std::nullopt;
}

const std::vector<Polygon>& RegionPolygons::polygons(const std::string& leaf_id) const {
    auto it = regions_.find(leaf_id);
    if (it == regions_.end()) {
        throw Error("UnknownLeaf", "no polygons for leaf '" + leaf_id + "'");
    }
    return it->second.polygons;
}

RegionPolygons RegionPolygons::from_geojson(const nlohmann::json& doc, const GeoTree* tree) {
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
        !doc.contains("features") || !doc["features"].is_array()) {
        throw Error("InvalidGeoJson", "expected a GeoJSON FeatureCollection");
    }
    RegionPolygons out;
    for (const auto& feature : doc["features"]) {
        const auto& props = feature.value("properties", nlohmann::json::object());
        if (!props.is_object() || !props.contains("leaf_id") || !props["leaf_id"].is_string()) {
            throw Error("InvalidGeoJson", "feature lacks a string \"leaf_id\" property");
        }
        const auto leaf_id = props["leaf_id"].get<std::string>();
        if (tree) {
            auto node = tree->find(leaf_id);
            if (!node || !tree->is_leaf(*node)) {
                throw Error("UnknownLeaf", "polygon leaf_id '" + leaf_id + "' is not a leaf of the tree");
            }
        }
        const auto& geometry = feature.value("geometry", nlohmann::json());
        if (!geometry.is_object() || !geometry.contains("coordinates")) {
            throw Error("MalformedPolygon", "feature '" + leaf_id + "' has no geometry");
        }
        const auto type = geometry.value("type", "");
        std::vector<Polygon> polygons;
        if (type == "Polygon") {
            polygons.push_back(polygon_from_json(geometry["coordinates"]));
        } else if (type == "MultiPolygon") {
            for (const auto& coords : geometry["coordinates"]) {
                polygons.push_back(polygon_from_json(coords));
            }
        } else {
            throw Error("MalformedPolygon", "unsupported geometry type '" + type + "'");
        }
        out.add(leaf_id, std::move(polygons));
    }
    return out;
}

std::optional<std::string> assign_region(LonLat point, const RegionPolygons& polygons) {
    return polygons.assign(point);
}

}  // namespace ghm
