#include "subqrag/config.hpp"

#include <fstream>
#include <sstream>

#include "subqrag/text.hpp"

namespace subqrag {

namespace {

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long out = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Configuration, "key " + key + " needs an integer, got \"" + value + "\"");
  }
}

long parse_positive(const std::string& key, const std::string& value) {
  const long v = parse_long(key, value);
  if (v <= 0) throw Error(ErrorKind::Configuration, "key " + key + " must be positive");
  return v;
}

}  // namespace

Config Config::from_string(const std::string& body, const std::string& origin) {
  Config config;
  std::istringstream in(body);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = text::normalize_whitespace(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Configuration,
                  origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = text::normalize_whitespace(trimmed.substr(0, eq));
    const std::string value = text::normalize_whitespace(trimmed.substr(eq + 1));

    if (key == "provider.kind") {
      if (value != "live" && value != "mock") {
        throw Error(ErrorKind::Configuration, "provider.kind must be live or mock");
      }
      config.provider.kind = value;
    } else if (key == "provider.base_url") {
      config.provider.base_url = value;
    } else if (key == "provider.chat_model") {
      config.provider.chat_model = value;
    } else if (key == "provider.embed_model") {
      config.provider.embed_model = value;
    } else if (key == "provider.max_in_flight") {
      config.provider.max_in_flight = static_cast<int>(parse_positive(key, value));
    } else if (key == "provider.retry_limit") {
      config.provider.retry_limit = static_cast<int>(parse_positive(key, value));
    } else if (key == "provider.mock_script") {
      config.provider.mock_script = value;
    } else if (key == "provider.mock_embed_dim") {
      config.provider.mock_embed_dim = static_cast<std::size_t>(parse_long(key, value));
    } else if (key == "cache.dir") {
      config.cache.dir = value;
    } else if (key == "decompose.target_count") {
      config.decompose.target_count = static_cast<int>(parse_positive(key, value));
    } else if (key == "decompose.few_shot_count") {
      config.decompose.few_shot_count = static_cast<int>(parse_positive(key, value));
    } else if (key == "judge.max_judge_chars") {
      config.judge.max_judge_chars = static_cast<std::size_t>(parse_positive(key, value));
    } else if (key == "rag.top_k") {
      config.rag.top_k = static_cast<std::size_t>(parse_positive(key, value));
    } else if (key == "rag.target_words") {
      config.rag.target_words = static_cast<std::size_t>(parse_positive(key, value));
    } else if (key == "rag.rerank_top_k") {
      config.rag.rerank_top_k = static_cast<std::size_t>(parse_positive(key, value));
    } else if (key == "quality.validation_size") {
      config.quality.validation_size = static_cast<std::size_t>(parse_positive(key, value));
    } else if (key == "quality.seed") {
      config.quality.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "metrics.aggregation") {
      if (value == "pooled") {
        config.metrics.aggregation = metrics::Aggregation::Pooled;
      } else if (value == "macro") {
        config.metrics.aggregation = metrics::Aggregation::Macro;
      } else {
        throw Error(ErrorKind::Configuration, "metrics.aggregation must be pooled or macro");
      }
    } else {
      throw Error(ErrorKind::Configuration,
                  origin + ":" + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    }
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path.string());
}

std::string Config::snapshot() const {
  std::ostringstream out;
  out << "provider.kind = " << provider.kind << "\n";
  if (!provider.base_url.empty()) out << "provider.base_url = " << provider.base_url << "\n";
  out << "provider.chat_model = " << provider.chat_model << "\n";
  out << "provider.embed_model = " << provider.embed_model << "\n";
  out << "provider.max_in_flight = " << provider.max_in_flight << "\n";
  out << "provider.retry_limit = " << provider.retry_limit << "\n";
  if (!provider.mock_script.empty())
    out << "provider.mock_script = " << provider.mock_script.string() << "\n";
  out << "provider.mock_embed_dim = " << provider.mock_embed_dim << "\n";
  if (!cache.dir.empty()) out << "cache.dir = " << cache.dir.string() << "\n";
  out << "decompose.target_count = " << decompose.target_count << "\n";
  out << "decompose.few_shot_count = " << decompose.few_shot_count << "\n";
  out << "judge.max_judge_chars = " << judge.max_judge_chars << "\n";
  out << "rag.top_k = " << rag.top_k << "\n";
  out << "rag.target_words = " << rag.target_words << "\n";
  out << "rag.rerank_top_k = " << rag.effective_rerank_top_k() << "\n";
  out << "quality.validation_size = " << quality.validation_size << "\n";
  out << "quality.seed = " << quality.seed << "\n";
  out << "metrics.aggregation = "
      << (metrics.aggregation == metrics::Aggregation::Pooled ? "pooled" : "macro") << "\n";
  return out.str();
}

std::shared_ptr<gateway::Provider> make_provider(const Config& config) {
  if (config.provider.kind == "mock") {
    if (config.provider.mock_script.empty()) {
      throw Error(ErrorKind::Configuration,
                  "provider.kind = mock needs provider.mock_script (or --mock-script)");
    }
    return gateway::MockProvider::from_script(config.provider.mock_script,
                                              config.provider.mock_embed_dim);
  }
  if (config.provider.base_url.empty()) {
    throw Error(ErrorKind::Configuration, "provider.kind = live needs provider.base_url");
  }
  return std::make_shared<gateway::HttpProvider>(config.provider.base_url);
}

gateway::Gateway make_gateway(const Config& config, std::shared_ptr<gateway::Provider> provider) {
  gateway::GatewayConfig gw;
  gw.chat_model = config.provider.chat_model;
  gw.embed_model = config.provider.embed_model;
  gw.retry_limit = config.provider.retry_limit;
  gw.max_in_flight = config.provider.max_in_flight;
  gw.cache_dir = config.cache.dir;
  return gateway::Gateway(provider ? std::move(provider) : make_provider(config), std::move(gw));
}

}  // namespace subqrag
