// Copyright 2026 The xlom Authors.
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
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "xlom/corpus.hpp"
#include "xlom/embeddings.hpp"
#include "xlom/error.hpp"

namespace xlom::embeddings {

// POST /embed
//   request:  {"texts": [string], "lang": string}
//   response: {"dim": int, "vectors": [[float]]} with status 200
struct HttpResponse {
  int status = 0;
  std::string body;
};

// Thrown by a transport when the request never produced a response.
class TransportError : public Error {
 public:
  using Error::Error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body) = 0;
};

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& endpoint, std::chrono::seconds timeout = std::chrono::seconds(60))
      : client_(endpoint) {
    require(client_.is_valid(), "invalid embedding endpoint '", endpoint, "'");
    client_.set_connection_timeout(timeout);
    client_.set_read_timeout(timeout);
  }

  HttpResponse post(const std::string& path, const std::string& body) override {
    auto res = client_.Post(path, body, "application/json");
    if (!res) throw TransportError("POST " + path + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  httplib::Client client_;
};

struct FetchOptions {
  std::size_t batch_size = 64;
  int attempts = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  std::string empty_lang = "en";           // lang sent when asking for dim with no texts
  std::string encoder_tag = "http";
};

namespace detail {

struct BatchResult {
  std::size_t dim = 0;
  std::vector<std::vector<float>> vectors;
};

inline BatchResult post_batch(Transport& transport, const std::vector<std::string>& texts, const std::string& lang,
                              const FetchOptions& options) {
  const nlohmann::json request = {{"texts", texts}, {"lang", lang}};
  const std::string body = request.dump();
  HttpResponse response;
  auto delay = options.backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      response = transport.post("/embed", body);
      break;
    } catch (const TransportError&) {
      if (attempt >= options.attempts) throw;
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  require(response.status == 200, "embedding provider returned status ", response.status, ": ",
          response.body.substr(0, 200));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(response.body);
  } catch (const nlohmann::json::exception& e) {
    fail("embedding provider returned invalid JSON: ", e.what());
  }
  require(j.is_object() && j.contains("dim") && j.contains("vectors"), "embedding response lacks dim/vectors");
  BatchResult out;
  const auto dim = j.at("dim").get<long long>();
  require(dim > 0, "embedding provider reported dim ", dim);
  out.dim = static_cast<std::size_t>(dim);
  const auto& vectors = j.at("vectors");
  require(vectors.is_array(), "vectors must be an array");
  require(vectors.size() == texts.size(), "row count mismatch: sent ", texts.size(), " texts, got ", vectors.size(),
          " vectors");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    require(v.is_array() && v.size() == out.dim, "vector ", i, " has wrong length");
    std::vector<float> row;
    row.reserve(out.dim);
    for (const auto& x : v) {
      require(x.is_number(), "vector ", i, " has a non-numeric component");
      const float f = x.get<float>();
      require(std::isfinite(f), "vector ", i, " has a non-finite component");
      row.push_back(f);
    }
    out.vectors.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

// One vector per sentence, in input order. Batches hold at most batch_size
// sentences and never mix languages. Rows are returned as served, not
// normalized.
inline EmbeddingMatrix fetch_embeddings(Transport& transport, const std::vector<corpus::Sentence>& sentences,
                                        const FetchOptions& options = {}) {
  require(options.batch_size >= 1, "batch_size must be at least 1");
  require(options.attempts >= 1, "attempts must be at least 1");
  if (sentences.empty()) {
    const auto probe = detail::post_batch(transport, {}, options.empty_lang, options);
    return EmbeddingMatrix(probe.dim, options.encoder_tag);
  }
  EmbeddingMatrix out;
  std::size_t i = 0;
  while (i < sentences.size()) {
    const std::string& lang = sentences[i].lang;
    std::vector<std::string> texts;
    std::vector<std::string> ids;
    while (i < sentences.size() && texts.size() < options.batch_size && sentences[i].lang == lang) {
      texts.push_back(sentences[i].text);
      ids.push_back(sentences[i].sent_id);
      ++i;
    }
    auto batch = detail::post_batch(transport, texts, lang, options);
    if (out.dim() == 0) {
      out = EmbeddingMatrix(batch.dim, options.encoder_tag);
    } else {
      require(batch.dim == out.dim(), "dim drift between batches: ", out.dim(), " then ", batch.dim);
    }
    for (std::size_t r = 0; r < ids.size(); ++r) out.append(std::move(ids[r]), batch.vectors[r]);
  }
  return out;
}

inline EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const std::vector<corpus::Sentence>& sentences,
                                        const FetchOptions& options = {}) {
  HttpTransport transport(endpoint);
  return fetch_embeddings(transport, sentences, options);
}

}  // namespace xlom::embeddings
