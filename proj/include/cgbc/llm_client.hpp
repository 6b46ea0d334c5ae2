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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace cgbc {

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  // Forwarded to endpoints that accept a sampling seed; not part of the digest.
  std::optional<std::uint64_t> seed;
};

// Lowercase hex SHA-256 over model, system and user text (unit-separator joined).
std::string request_digest(const ChatRequest& req);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

enum class LlmMode { kLive, kRecord, kReplay };

LlmMode llm_mode_from_string(const std::string& s);

struct LlmClientConfig {
  std::string endpoint;
  std::string model = "gpt-4.1";
  LlmMode mode = LlmMode::kReplay;
  std::filesystem::path fixture_path;
  std::size_t per_call = 10;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double temperature = 1.0;
};

// Chat-completions style POST. Connection failures, 429 and 5xx responses are
// retried with exponential backoff; anything else is a TransportError.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(LlmClientConfig cfg);
  std::string complete(const ChatRequest& req) override;

 private:
  LlmClientConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

// Serves recorded responses. Several entries may share a digest (repeated
// calls with an identical prompt); they are handed out in file order.
class ReplayLlmClient final : public LlmClient {
 public:
  explicit ReplayLlmClient(const std::filesystem::path& fixture);
  std::string complete(const ChatRequest& req) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::deque<std::string>> responses_;
  std::map<std::string, std::size_t> served_;
};

// Forwards to `inner` and appends every (digest, response) to the fixture
// file, rewriting it atomically so it stays a valid JSON array.
class RecordingLlmClient final : public LlmClient {
 public:
  RecordingLlmClient(std::unique_ptr<LlmClient> inner, std::filesystem::path fixture);
  std::string complete(const ChatRequest& req) override;

 private:
  std::unique_ptr<LlmClient> inner_;
  std::filesystem::path fixture_;
  std::mutex mu_;
};

std::unique_ptr<LlmClient> make_llm_client(const LlmClientConfig& cfg);

}  // namespace cgbc
