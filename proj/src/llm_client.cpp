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


#include "cgbc/llm_client.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <array>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "cgbc/error.hpp"
#include "json.hpp"

namespace cgbc {
namespace {

nlohmann::json read_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open LLM fixture " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed LLM fixture " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw DataError("LLM fixture " + path.string() + " must be a JSON array");
  return j;
}

}  // namespace

std::string request_digest(const ChatRequest& req) {
  const std::string payload = req.model + '\x1f' + req.system + '\x1f' + req.user;
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

LlmMode llm_mode_from_string(const std::string& s) {
  if (s == "live") return LlmMode::kLive;
  if (s == "record") return LlmMode::kRecord;
  if (s == "replay") return LlmMode::kReplay;
  throw std::invalid_argument("unknown LLM mode '" + s + "'");
}

HttpLlmClient::HttpLlmClient(LlmClientConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint.find("://");
  const std::string scheme =
      scheme_end == std::string::npos ? "" : cfg_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("LLM endpoint must be an http(s) URL: " + cfg_.endpoint);
  }
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = cfg_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
}

std::string HttpLlmClient::complete(const ChatRequest& req) {
  nlohmann::json body;
  body["model"] = req.model;
  body["temperature"] = cfg_.temperature;
  body["messages"] = nlohmann::json::array({
      {{"role", "system"}, {"content", req.system}},
      {{"role", "user"}, {"content", req.user}},
  });
  if (req.seed) body["seed"] = *req.seed;

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  auto backoff = cfg_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("LLM request failed ({}); retry {}/{} in {} ms", last_error, attempt,
                   cfg_.max_retries, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 500));
    }
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("unexpected LLM response shape: ") + e.what());
    }
  }
  throw TransportError("LLM endpoint unreachable after " + std::to_string(cfg_.max_retries) +
                       " retries: " + last_error);
}

ReplayLlmClient::ReplayLlmClient(const std::filesystem::path& fixture) {
  const auto j = read_fixture(fixture);
  try {
    for (const auto& e : j) {
      responses_[e.at("digest").get<std::string>()].push_back(e.at("response").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("LLM fixture " + fixture.string() + " schema error: " + e.what());
  }
}

std::string ReplayLlmClient::complete(const ChatRequest& req) {
  const auto digest = request_digest(req);
  std::lock_guard lock(mu_);
  auto it = responses_.find(digest);
  if (it == responses_.end()) throw ReplayMissError(digest, "");
  auto& served = served_[digest];
  if (served >= it->second.size()) {
    throw ReplayMissError(digest, "all " + std::to_string(it->second.size()) +
                                      " recorded responses consumed");
  }
  return it->second[served++];
}

RecordingLlmClient::RecordingLlmClient(std::unique_ptr<LlmClient> inner,
                                       std::filesystem::path fixture)
    : inner_(std::move(inner)), fixture_(std::move(fixture)) {}

std::string RecordingLlmClient::complete(const ChatRequest& req) {
  auto response = inner_->complete(req);
  std::lock_guard lock(mu_);
  nlohmann::json entries = std::filesystem::exists(fixture_) ? read_fixture(fixture_)
                                                             : nlohmann::json::array();
  entries.push_back({{"digest", request_digest(req)}, {"response", response}});
  auto tmp = fixture_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write LLM fixture " + tmp.string());
    out << entries.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, fixture_);
  return response;
}

std::unique_ptr<LlmClient> make_llm_client(const LlmClientConfig& cfg) {
  switch (cfg.mode) {
    case LlmMode::kReplay:
      if (cfg.fixture_path.empty() || !std::filesystem::exists(cfg.fixture_path)) {
        throw DataError("replay mode needs an existing fixture file, got '" +
                        cfg.fixture_path.string() + "'");
      }
      return std::make_unique<ReplayLlmClient>(cfg.fixture_path);
    case LlmMode::kRecord:
      if (cfg.fixture_path.empty()) throw std::invalid_argument("record mode needs a fixture path");
      return std::make_unique<RecordingLlmClient>(std::make_unique<HttpLlmClient>(cfg),
                                                  cfg.fixture_path);
    case LlmMode::kLive:
      return std::make_unique<HttpLlmClient>(cfg);
  }
  throw std::invalid_argument("bad LLM mode");
}

}  // namespace cgbc
