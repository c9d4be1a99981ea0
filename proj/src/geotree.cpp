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

#include "ghm/geotree.hpp"

#include <algorithm>
#include <limits>

#include "ghm/error.hpp"

namespace ghm {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

}  // namespace

GeoTree GeoTree::build(std::vector<NodeSpec> spec) {
    if (spec.empty()) {
        throw Error("EmptyTree", "tree description has no nodes");
    }
    GeoTree tree;
    const std::size_t n = spec.size();
    tree.ids_.reserve(n);
    tree.names_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!tree.by_id_.emplace(spec[i].id, i).second) {
            throw Error("DuplicateId", "duplicate node id '" + spec[i].id + "'");
        }
        tree.ids_.push_back(spec[i].id);
        tree.names_.push_back(spec[i].name);
    }

    tree.parents_.assign(n, std::nullopt);
    tree.children_.assign(n, {});
    std::optional<NodeIndex> root;
    for (std::size_t i = 0; i < n; ++i) {
        if (!spec[i].parent) {
            if (root) {
                throw Error("MultipleRoots", "nodes '" + tree.ids_[*root] + "' and '" +
                                                 spec[i].id + "' both lack a parent");
            }
            root = i;
            continue;
        }
        auto it = tree.by_id_.find(*spec[i].parent);
        if (it == tree.by_id_.end()) {
            throw Error("UnknownParent", "node '" + spec[i].id + "' references unknown parent '" +
                                             *spec[i].parent + "'");
        }
        if (it->second == i) {
            throw Error("CycleDetected", "node '" + spec[i].id + "' is its own parent");
        }
        tree.parents_[i] = it->second;
        tree.children_[it->second].push_back(i);
    }
    if (!root) {
        throw Error("CycleDetected", "no root: every node has a parent");
    }
    tree.root_ = *root;

    // Breadth-first from the root; anything unreached sits on a cycle.
    tree.node_depth_.assign(n, npos);
    std::vector<NodeIndex> frontier{tree.root_};
    tree.node_depth_[tree.root_] = 0;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        std::vector<NodeIndex> next;
        for (auto v : frontier) {
            for (auto c : tree.children_[v]) {
                tree.node_depth_[c] = tree.node_depth_[v] + 1;
                next.push_back(c);
                ++reached;
            }
        }
        frontier = std::move(next);
    }
    if (reached != n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (tree.node_depth_[i] == npos) {
                throw Error("CycleDetected", "node '" + tree.ids_[i] + "' does not reach the root");
            }
        }
    }

    tree.leaf_pos_.assign(n, npos);
    tree.paths_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        if (!tree.children_[i].empty()) {
            continue;
        }
        tree.leaf_pos_[i] = tree.leaves_.size();
        tree.leaves_.push_back(i);
        auto& path = tree.paths_[i];
        for (std::optional<NodeIndex> v = i; v; v = tree.parents_[*v]) {
            path.push_back(*v);
        }
        tree.depth_ = std::max(tree.depth_, path.size());
    }
    return tree;
}

std::optional<NodeIndex> GeoTree::parent(NodeIndex node) const {
    return parents_.at(node);
}

std::optional<NodeIndex> GeoTree::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

NodeIndex GeoTree::index_of(std::string_view id) const {
    auto found = find(id);
    if (!found) {
        throw Error("UnknownNode", "unknown node '" + std::string(id) + "'");
    }
    return *found;
}

std::size_t GeoTree::leaf_position(NodeIndex node) const {
    if (node >= size()) {
        throw Error("UnknownNode", "node index " + std::to_string(node) + " out of range");
    }
    if (leaf_pos_[node] == npos) {
        throw Error("NotALeaf", "node '" + ids_[node] + "' is not a leaf");
    }
    return leaf_pos_[node];
}

RegionPath GeoTree::path_to_root(std::string_view leaf_id) const {
    const auto node = index_of(leaf_id);
    auto p = path(node);
    return RegionPath{{p.begin(), p.end()}};
}

std::span<const NodeIndex> GeoTree::path(NodeIndex leaf) const {
    leaf_position(leaf);  // validates
    return paths_[leaf];
}

std::vector<NodeSpec> GeoTree::spec() const {
    std::vector<NodeSpec> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        std::optional<std::string> parent;
        if (parents_[i]) {
            parent = ids_[*parents_[i]];
        }
        out.push_back({ids_[i], names_[i], parent});
    }
    return out;
}

bool operator==(const GeoTree& a, const GeoTree& b) {
    return a.spec() == b.spec();
}

nlohmann::json tree_to_json(const GeoTree& tree) {
    auto doc = nlohmann::json::array();
    for (const auto& node : tree.spec()) {
        doc.push_back({{"id", node.id},
                       {"name", node.name},
                       {"parent", node.parent ? nlohmann::json(*node.parent) : nlohmann::json()}});
    }
    return doc;
}

GeoTree tree_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) {
        throw Error("InvalidTreeFile", "tree description must be a JSON array");
    }
    std::vector<NodeSpec> spec;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
            throw Error("InvalidTreeFile", "each node needs a string \"id\"");
        }
        NodeSpec node;
        node.id = entry["id"].get<std::string>();
        node.name = entry.value("name", node.id);
        if (entry.contains("parent") && !entry["parent"].is_null()) {
            if (!entry["parent"].is_string()) {
                throw Error("InvalidTreeFile", "\"parent\" of '" + node.id + "' must be a string or null");
            }
            node.parent = entry["parent"].get<std::string>();
        }
        spec.push_back(std::move(node));
    }
    return GeoTree::build(std::move(spec));
}

}  // namespace ghm
