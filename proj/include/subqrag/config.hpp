#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "subqrag/coverage.hpp"
#include "subqrag/decompose.hpp"
#include "subqrag/gateway.hpp"
#include "subqrag/metrics.hpp"
#include "subqrag/rag.hpp"

namespace subqrag {

/// Flat dotted-key configuration. Unknown keys are rejected at load.
struct Config {
  struct ProviderCfg {
    std::string kind = "mock";  // live | mock
    std::string base_url;
    std::string chat_model = "gpt-4";
    std::string embed_model = "text-embed";
    int max_in_flight = 4;
    int retry_limit = 3;
    std::filesystem::path mock_script;
    std::size_t mock_embed_dim = 16;  // fallback dimension for unscripted mock embeds
  } provider;

  struct CacheCfg {
    std::filesystem::path dir;
  } cache;

  decompose::Options decompose;
  coverage::Options judge;
  rag::RagConfig rag;

  struct QualityCfg {
    std::size_t validation_size = 100;
    std::uint64_t seed = 0;
  } quality;

  struct MetricsCfg {
    metrics::Aggregation aggregation = metrics::Aggregation::Pooled;
  } metrics;

  static Config load(const std::filesystem::path& path);
  static Config from_string(const std::string& body, const std::string& origin = "<config>");

  /// The flat key=value snapshot, for manifests.
  std::string snapshot() const;
};

/// Builds the configured provider (mock script or live endpoint) behind a
/// caching gateway.
std::shared_ptr<gateway::Provider> make_provider(const Config& config);
gateway::Gateway make_gateway(const Config& config,
                              std::shared_ptr<gateway::Provider> provider = nullptr);

}  // namespace subqrag
