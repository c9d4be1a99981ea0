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


#ifndef GHM_TESTS_SUPPORT_HPP
#define GHM_TESTS_SUPPORT_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "ghm/error.hpp"
#include "ghm/geotree.hpp"

namespace ghm::test {

inline std::string fixture_path(const std::string& name) { return std::string(GHM_FIXTURE_DIR) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name));
    REQUIRE_MESSAGE(in.good(), "missing fixture " << name);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline nlohmann::json fixture_json(const std::string& name) { return nlohmann::json::parse(read_fixture(name)); }

inline GeoTree fixture_tree() { return tree_from_json(fixture_json("tree.json")); }

/// root -> {a, b}
inline GeoTree two_leaf_tree() {
    return GeoTree::build({{"root", "Root", std::nullopt}, {"a", "A", "root"}, {"b", "B", "root"}});
}

/// Error code thrown by `f`, or "" when nothing was thrown.
template <class F>
std::string error_code(F&& f) {
    try {
        f();
    } catch (const ghm::Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace ghm::test

#define CHECK_ERROR(expr, code) CHECK(::ghm::test::error_code([&] { (void)(expr); }) == std::string(code))

#endif  // GHM_TESTS_SUPPORT_HPP
