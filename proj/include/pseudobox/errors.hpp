// Copyright 2026 The pseudobox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSEUDOBOX__ERRORS_HPP_
#define PSEUDOBOX__ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pseudobox
{

/// Invalid configuration or parameters. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument
{
public:
  explicit ConfigError(const std::string & what)
  : std::invalid_argument(what) {}
};

/// Malformed or inconsistent on-disk data.
class FormatError : public std::runtime_error
{
public:
  explicit FormatError(const std::string & what)
  : std::runtime_error(what) {}
};

/// Input that is well-formed but cannot be processed (missing pose, empty window).
class PipelineError : public std::runtime_error
{
public:
  explicit PipelineError(const std::string & what)
  : std::runtime_error(what) {}
};

}  // namespace pseudobox

#endif  // PSEUDOBOX__ERRORS_HPP_
