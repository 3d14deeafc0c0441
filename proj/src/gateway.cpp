#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "subqrag/gateway.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "subqrag/jsonl.hpp"
#include "subqrag/text.hpp"

namespace subqrag::gateway {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &md_len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(tmpl.body.size());
  const std::string& body = tmpl.body;
  std::size_t i = 0;
  auto is_name_char = [](char c) { return (c >= 'a' && c <= 'z') || c == '-'; };
  while (i < body.size()) {
    if (body[i] == '$' && i + 1 < body.size() && is_name_char(body[i + 1])) {
      std::size_t j = i + 1;
      while (j < body.size() && is_name_char(body[j])) ++j;
      std::string name = body.substr(i + 1, j - i - 1);
      auto it = bindings.find(name);
      if (it == bindings.end()) {
        throw Error(ErrorKind::Template,
                    "unbound placeholder $" + name + " in template \"" + tmpl.name + "\"");
      }
      out += it->second;
      i = j;
    } else {
      out.push_back(body[i]);
      ++i;
    }
  }
  return out;
}

namespace {

std::string request_key(const ChatRequest& request) {
  // Serialized form the digest and mock matching operate on.
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json payload{{"model", request.model}, {"temperature", request.temperature}, {"messages", messages}};
  return payload.dump();
}

std::string joined_contents(const ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages) {
    if (!out.empty()) out += "\n";
    out += m.content;
  }
  return out;
}

}  // namespace

std::string chat_digest(const ChatRequest& request) { return sha256_hex(request_key(request)); }

std::string embed_digest(const std::string& model, const std::string& text) {
  return sha256_hex("embed\x1f" + model + "\x1f" + text);
}

// --- MockProvider ---

MockProvider::MockProvider(std::vector<Rule> rules, std::size_t fallback_embed_dim)
    : rules_(std::move(rules)), fallback_embed_dim_(fallback_embed_dim) {
  failures_left_.reserve(rules_.size());
  for (const auto& r : rules_) failures_left_.push_back(r.fail_times);
}

std::shared_ptr<MockProvider> MockProvider::from_script(const std::filesystem::path& path,
                                                        std::size_t fallback_embed_dim) {
  std::vector<Rule> rules;
  jsonl::for_each_record(path, [&](const json& record, std::size_t line_no) {
    Rule rule;
    if (record.contains("match_all")) {
      for (const auto& m : record.at("match_all")) rule.match_all.push_back(m.get<std::string>());
    } else if (record.contains("match")) {
      rule.match_all.push_back(record.at("match").get<std::string>());
    } else {
      throw Error(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) +
                                            ": mock rule needs \"match\" or \"match_all\"");
    }
    if (!record.contains("response") || !record.at("response").is_string()) {
      throw Error(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) +
                                            ": mock rule needs a string \"response\"");
    }
    rule.response = record.at("response").get<std::string>();
    rule.fail_times = record.value("fail_times", 0);
    rules.push_back(std::move(rule));
  });
  return std::make_shared<MockProvider>(std::move(rules), fallback_embed_dim);
}

namespace {

bool is_number_array(const std::string& s) {
  const auto parsed = json::parse(s, nullptr, /*allow_exceptions=*/false);
  if (!parsed.is_array()) return false;
  for (const auto& x : parsed) {
    if (!x.is_number()) return false;
  }
  return true;
}

}  // namespace

std::string MockProvider::lookup(const std::string& key, const std::string& digest,
                                 bool embeddings_only) {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const Rule& rule = rules_[i];
    // Embed requests only consider rules scripted with a vector response.
    if (embeddings_only && !is_number_array(rule.response)) continue;
    bool hit = true;
    for (const auto& needle : rule.match_all) {
      if (needle.rfind("sha256:", 0) == 0) {
        if (needle.substr(7) != digest) {
          hit = false;
          break;
        }
      } else if (key.find(needle) == std::string::npos) {
        hit = false;
        break;
      }
    }
    if (!hit) continue;
    if (failures_left_[i] > 0) {
      --failures_left_[i];
      throw Error(ErrorKind::Provider, "scripted transient failure", /*retryable=*/true);
    }
    return rule.response;
  }
  throw Error(ErrorKind::Provider, "no scripted response matches request");
}

std::string MockProvider::chat(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string key = joined_contents(request);
  chat_log_.push_back(key);
  return lookup(key, chat_digest(request), /*embeddings_only=*/false);
}

std::vector<double> MockProvider::embed(const std::string& model, const std::string& text) {
  std::string response;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    embed_log_.push_back(text);
    try {
      response = lookup(text, embed_digest(model, text), /*embeddings_only=*/true);
    } catch (const Error& e) {
      if (e.retryable() || fallback_embed_dim_ == 0) throw;
      // Deterministic pseudo-embedding derived from the text content. Raw
      // engine output is mapped to [-1, 1) without a distribution object so
      // the values are identical across standard library implementations.
      std::mt19937_64 rng(text::fnv1a64(text));
      std::vector<double> v(fallback_embed_dim_);
      for (double& x : v) {
        x = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
      }
      return v;
    }
  }
  json parsed;
  try {
    parsed = json::parse(response);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("mock embed response is not JSON: ") + e.what());
  }
  if (!parsed.is_array()) throw Error(ErrorKind::Decode, "mock embed response is not an array");
  std::vector<double> v;
  v.reserve(parsed.size());
  for (const auto& x : parsed) {
    if (!x.is_number()) throw Error(ErrorKind::Decode, "mock embed vector has a non-number entry");
    v.push_back(x.get<double>());
  }
  return v;
}

// --- HttpProvider ---

HttpProvider::HttpProvider(std::string base_url) : base_url_(std::move(base_url)) {
  if (const char* key = std::getenv("SUBQRAG_API_KEY")) api_key_ = key;
}

namespace {

json http_post(const std::string& base_url, const std::string& api_key, const std::string& route,
               const json& payload) {
  httplib::Client client(base_url);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = client.Post(route, headers, payload.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::Provider, "transport failure on " + route, /*retryable=*/true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorKind::Provider, route + " returned " + std::to_string(res->status),
                /*retryable=*/true);
  }
  if (res->status != 200) {
    throw Error(ErrorKind::Provider, route + " returned " + std::to_string(res->status) + ": " +
                                         res->body.substr(0, 300));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("malformed provider response: ") + e.what());
  }
}

}  // namespace

std::string HttpProvider::chat(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  json payload{{"model", request.model},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens},
               {"messages", messages}};
  json body = http_post(base_url_, api_key_, "/chat/completions", payload);
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("malformed chat completion: ") + e.what());
  }
}

std::vector<double> HttpProvider::embed(const std::string& model, const std::string& text) {
  json payload{{"model", model}, {"input", text}};
  json body = http_post(base_url_, api_key_, "/embeddings", payload);
  try {
    const json& vec = body.at("data").at(0).at("embedding");
    std::vector<double> v;
    v.reserve(vec.size());
    for (const auto& x : vec) v.push_back(x.get<double>());
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("malformed embedding response: ") + e.what());
  }
}

// --- Gateway ---

struct Gateway::State {
  std::shared_ptr<Provider> provider;
  GatewayConfig config;
  std::counting_semaphore<4096> in_flight;
  std::mutex memory_mutex;
  std::map<std::string, std::string> memory_cache;  // digest -> serialized entry
  std::atomic<std::uint64_t> chat_calls{0};
  std::atomic<std::uint64_t> embed_calls{0};
  std::atomic<std::size_t> embed_dim{0};

  State(std::shared_ptr<Provider> p, GatewayConfig c)
      : provider(std::move(p)), config(std::move(c)), in_flight(std::max(1, config.max_in_flight)) {}

  std::optional<std::string> cache_get(const std::string& digest) {
    {
      std::lock_guard<std::mutex> lock(memory_mutex);
      auto it = memory_cache.find(digest);
      if (it != memory_cache.end()) return it->second;
    }
    if (config.cache_dir.empty()) return std::nullopt;
    std::ifstream in(config.cache_dir / (digest + ".json"));
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    std::string serialized = buf.str();
    std::lock_guard<std::mutex> lock(memory_mutex);
    memory_cache[digest] = serialized;
    return serialized;
  }

  void cache_store(const std::string& digest, const std::string& serialized) {
    {
      std::lock_guard<std::mutex> lock(memory_mutex);
      memory_cache[digest] = serialized;
    }
    if (config.cache_dir.empty()) return;
    // Write-temp-then-rename keeps concurrent writers from corrupting entries.
    static std::atomic<std::uint64_t> counter{0};
    std::filesystem::path tmp =
        config.cache_dir / (digest + ".tmp" + std::to_string(counter.fetch_add(1)));
    {
      std::ofstream out(tmp);
      out << serialized;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, config.cache_dir / (digest + ".json"), ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

  template <typename Fn>
  void with_retries(Fn&& attempt) {
    const int limit = std::max(1, config.retry_limit);
    std::chrono::milliseconds delay = config.backoff_base;
    for (int tries = 1;; ++tries) {
      try {
        attempt();
        return;
      } catch (const Error& e) {
        if (!e.retryable() || tries >= limit) throw;
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        delay *= 2;
      }
    }
  }

  struct Slot {
    std::counting_semaphore<4096>& sem;
    explicit Slot(std::counting_semaphore<4096>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
  };
};

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayConfig config)
    : state_(std::make_unique<State>(std::move(provider), std::move(config))) {
  if (!state_->config.cache_dir.empty())
    std::filesystem::create_directories(state_->config.cache_dir);
}

Gateway::Gateway(Gateway&&) noexcept = default;
Gateway& Gateway::operator=(Gateway&&) noexcept = default;
Gateway::~Gateway() = default;

std::uint64_t Gateway::provider_chat_calls() const { return state_->chat_calls.load(); }
std::uint64_t Gateway::provider_embed_calls() const { return state_->embed_calls.load(); }
std::size_t Gateway::embed_dimension() const { return state_->embed_dim.load(); }
const GatewayConfig& Gateway::config() const { return state_->config; }

ChatRequest Gateway::make_request(std::string prompt) const {
  ChatRequest request;
  request.model = state_->config.chat_model;
  request.messages.push_back({"user", std::move(prompt)});
  return request;
}

std::string Gateway::chat_impl(const ChatRequest& request, bool read_cache) {
  ChatRequest effective = request;
  if (effective.model.empty()) effective.model = state_->config.chat_model;
  const std::string digest = chat_digest(effective);
  if (read_cache) {
    if (auto hit = state_->cache_get(digest)) {
      return json::parse(*hit).at("response").get<std::string>();
    }
  }
  std::string completion;
  state_->with_retries([&] {
    State::Slot slot(state_->in_flight);
    state_->chat_calls.fetch_add(1);
    completion = state_->provider->chat(effective);
  });
  json messages = json::array();
  for (const auto& m : effective.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  json entry{{"kind", "chat"},
             {"model", effective.model},
             {"temperature", effective.temperature},
             {"messages", messages},
             {"response", completion}};
  state_->cache_store(digest, entry.dump());
  return completion;
}

std::string Gateway::chat(const ChatRequest& request) { return chat_impl(request, true); }

std::string Gateway::chat_fresh(const ChatRequest& request) { return chat_impl(request, false); }

std::vector<double> Gateway::embed(const std::string& text) {
  if (text::normalize_whitespace(text).empty())
    throw Error(ErrorKind::IncompleteInput, "cannot embed empty text");
  const std::string digest = embed_digest(state_->config.embed_model, text);
  std::vector<double> vec;
  if (auto hit = state_->cache_get(digest)) {
    vec = json::parse(*hit).at("vector").get<std::vector<double>>();
  } else {
    state_->with_retries([&] {
      State::Slot slot(state_->in_flight);
      state_->embed_calls.fetch_add(1);
      vec = state_->provider->embed(state_->config.embed_model, text);
    });
    json entry{{"kind", "embed"},
               {"model", state_->config.embed_model},
               {"text", text},
               {"vector", vec}};
    state_->cache_store(digest, entry.dump());
  }
  std::size_t expected = state_->embed_dim.load();
  if (expected == 0) {
    state_->embed_dim.store(vec.size());
  } else if (vec.size() != expected) {
    throw Error(ErrorKind::Configuration,
                "embedding dimension mismatch: got " + std::to_string(vec.size()) +
                    ", expected " + std::to_string(expected));
  }
  return vec;
}

}  // namespace subqrag::gateway
