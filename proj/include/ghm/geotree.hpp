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

#ifndef GHM_GEOTREE_HPP
#define GHM_GEOTREE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace ghm {

/// Dense node index, assigned by insertion order.
using NodeIndex = std::size_t;

/// One row of a hierarchy description. `parent` is empty for the root.
struct NodeSpec {
    std::string id;
    std::string name;
    std::optional<std::string> parent;

    bool operator==(const NodeSpec&) const = default;
};

/// Nodes on the way from a leaf up to the root, both ends included.
/// Front is the leaf, back is the root.
struct RegionPath {
    std::vector<NodeIndex> nodes;

    std::size_t size() const { return nodes.size(); }
    NodeIndex leaf() const { return nodes.front(); }
    NodeIndex root() const { return nodes.back(); }
};

/// Rooted region hierarchy (country -> city -> neighborhood, or any other
/// containment chain). Immutable once built; trees may be unbalanced.
class GeoTree {
public:
    /// Validates and builds a tree. Throws ghm::Error with code
    /// DuplicateId, UnknownParent, MultipleRoots, CycleDetected or EmptyTree.
    static GeoTree build(std::vector<NodeSpec> spec);

    std::size_t size() const { return ids_.size(); }
    NodeIndex root() const { return root_; }

    const std::string& id(NodeIndex node) const { return ids_.at(node); }
    const std::string& name(NodeIndex node) const { return names_.at(node); }
    std::optional<NodeIndex> parent(NodeIndex node) const;
    std::span<const NodeIndex> children(NodeIndex node) const { return children_.at(node); }
    bool is_leaf(NodeIndex node) const { return children_.at(node).empty(); }

    std::optional<NodeIndex> find(std::string_view id) const;
    /// Like find(), but throws UnknownNode.
    NodeIndex index_of(std::string_view id) const;

    /// Leaves in ascending node-index order.
    std::span<const NodeIndex> leaves() const { return leaves_; }
    /// Position of a leaf inside leaves(); throws NotALeaf / UnknownNode.
    std::size_t leaf_position(NodeIndex node) const;

    /// Number of levels: 1 + longest leaf-to-root edge count.
    std::size_t depth() const { return depth_; }
    /// Edges between `node` and the root (root has 0).
    std::size_t node_depth(NodeIndex node) const { return node_depth_.at(node); }

    RegionPath path_to_root(std::string_view leaf_id) const;
    /// Cached leaf-to-root path of a leaf given by dense index.
    std::span<const NodeIndex> path(NodeIndex leaf) const;

    /// The description this tree was built from, in index order.
    std::vector<NodeSpec> spec() const;

private:
    std::vector<std::string> ids_;
    std::vector<std::string> names_;
    std::vector<std::optional<NodeIndex>> parents_;
    std::vector<std::vector<NodeIndex>> children_;
    std::vector<std::size_t> node_depth_;
    std::vector<NodeIndex> leaves_;
    std::vector<std::size_t> leaf_pos_;  // npos for internal nodes
    std::vector<std::vector<NodeIndex>> paths_;  // indexed by node, empty for internal
    std::unordered_map<std::string, NodeIndex> by_id_;
    NodeIndex root_ = 0;
    std::size_t depth_ = 0;
};

bool operator==(const GeoTree& a, const GeoTree& b);

nlohmann::json tree_to_json(const GeoTree& tree);
GeoTree tree_from_json(const nlohmann::json& doc);

}  // namespace ghm

#endif  // GHM_GEOTREE_HPP
