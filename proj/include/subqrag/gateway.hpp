#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "subqrag/error.hpp"

namespace subqrag::gateway {

struct ChatMessage {
  std::string role;  // "system" | "user"
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model;
};

struct PromptTemplate {
  std::string name;
  std::string body;  // placeholders: $question, $sub-question, $text, $few-shot-examples
};

/// Substitutes every $placeholder in the body verbatim from bindings.
/// An unbound placeholder raises a Template error naming it.
std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings);

/// Content address of a chat request: sha256 over model, temperature and the
/// rendered messages. Identical requests yield identical digests.
std::string chat_digest(const ChatRequest& request);
std::string embed_digest(const std::string& model, const std::string& text);

std::string sha256_hex(std::string_view data);

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string chat(const ChatRequest& request) = 0;
  virtual std::vector<double> embed(const std::string& model, const std::string& text) = 0;
  virtual std::string name() const = 0;
};

/// Scripted offline provider. Rules are matched in order against the request
/// text (all message contents joined for chat, the raw text for embeds);
/// the first matching rule wins. A rule matches when every `match_all`
/// substring occurs in the request, or when a `sha256:<hex>` entry equals the
/// request digest. `fail_times` makes the first N hits raise a transient
/// provider error. Embed responses are JSON number arrays; when
/// `fallback_embed_dim` is nonzero, unscripted embeds get a deterministic
/// hash-derived vector of that dimension instead of failing.
class MockProvider : public Provider {
 public:
  struct Rule {
    std::vector<std::string> match_all;  // empty matches everything
    std::string response;
    int fail_times = 0;
  };

  explicit MockProvider(std::vector<Rule> rules, std::size_t fallback_embed_dim = 0);

  /// Loads a JSONL script of {"match": str | "match_all": [str,...],
  /// "response": str, "fail_times"?: int}.
  static std::shared_ptr<MockProvider> from_script(const std::filesystem::path& path,
                                                   std::size_t fallback_embed_dim = 0);

  std::string chat(const ChatRequest& request) override;
  std::vector<double> embed(const std::string& model, const std::string& text) override;
  std::string name() const override { return "mock"; }

  const std::vector<std::string>& chat_log() const { return chat_log_; }
  const std::vector<std::string>& embed_log() const { return embed_log_; }

 private:
  std::string lookup(const std::string& key, const std::string& digest, bool embeddings_only);

  std::vector<Rule> rules_;
  std::vector<int> failures_left_;
  std::size_t fallback_embed_dim_;
  std::vector<std::string> chat_log_;
  std::vector<std::string> embed_log_;
  std::mutex mutex_;
};

/// Chat-completion provider speaking the common JSON-over-HTTP schema
/// (POST base_url/chat/completions and base_url/embeddings). The API key is
/// read from SUBQRAG_API_KEY.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(std::string base_url);
  std::string chat(const ChatRequest& request) override;
  std::vector<double> embed(const std::string& model, const std::string& text) override;
  std::string name() const override { return "live"; }

 private:
  std::string base_url_;
  std::string api_key_;
};

struct GatewayConfig {
  std::string chat_model = "gpt-4";
  std::string embed_model = "text-embed";
  int retry_limit = 3;       // total attempts per request
  int max_in_flight = 4;     // concurrent provider calls
  std::chrono::milliseconds backoff_base{50};
  std::filesystem::path cache_dir;  // empty: in-memory cache only
};

/// Deterministic caching front end for a provider: content-addressed cache
/// (memory plus optional on-disk store with atomic writes), bounded in-flight
/// requests, and exponential-backoff retries for transient failures.
/// Move-only; safe for concurrent use through one instance.
class Gateway {
 public:
  Gateway(std::shared_ptr<Provider> provider, GatewayConfig config);
  Gateway(Gateway&&) noexcept;
  Gateway& operator=(Gateway&&) noexcept;
  ~Gateway();

  std::string chat(const ChatRequest& request);
  /// Re-ask path: skips the cache read (still stores the fresh response).
  std::string chat_fresh(const ChatRequest& request);
  std::vector<double> embed(const std::string& text);

  ChatRequest make_request(std::string prompt) const;

  std::uint64_t provider_chat_calls() const;
  std::uint64_t provider_embed_calls() const;
  std::size_t embed_dimension() const;
  const GatewayConfig& config() const;

 private:
  std::string chat_impl(const ChatRequest& request, bool read_cache);

  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace subqrag::gateway
