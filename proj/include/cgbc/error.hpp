// Copyright 2026 The CGBC Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cgbc {

// Input data that violates a file format or a container invariant.
// Parameter misuse (bad counts, out-of-range thresholds) is reported with
// std::invalid_argument instead; the CLI maps the two to different exit codes.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An LLM reply that could not be parsed into concepts.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::string raw)
      : DataError(what), raw_(std::move(raw)) {}
  const std::string& raw_text() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// A replay fixture has no (remaining) response for a request digest.
class ReplayMissError : public DataError {
 public:
  explicit ReplayMissError(std::string digest, const std::string& detail)
      : DataError("replay fixture has no response for digest " + digest +
                  (detail.empty() ? "" : " (" + detail + ")")),
        digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

// The LLM endpoint could not be reached or kept failing after retries.
class TransportError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cgbc
