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

#ifndef GHM_ERROR_HPP
#define GHM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ghm {

/// Every failure raised by the library carries a stable, machine-readable
/// code (e.g. "CycleDetected") next to the human message. The CLI maps the
/// code to an exit status and echoes it on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Raised when training produces a non-finite likelihood. Kept as a distinct
/// type because callers treat it as a numerical failure, not bad input.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace ghm

#endif  // GHM_ERROR_HPP
