#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "apollo/bias.hpp"
#include "apollo/error.hpp"
#include "apollo/llm.hpp"
#include "apollo/localizer.hpp"
#include "apollo/technique.hpp"

namespace apollo {

/// Service configuration. Relative paths are resolved against the directory
/// of the config file they came from.
struct ServiceConfig {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string provider = "rule";
  std::filesystem::path registry_path;
  std::filesystem::path lexicon_path;
  std::filesystem::path questionnaire_path;
  std::filesystem::path faq_path;
  std::filesystem::path profile_store_path;
  Metric metric = Metric::Euclidean;
  ScenarioThresholds thresholds = ScenarioThresholds::defaults();
  long long gradual_horizon = 20;
  std::size_t char_budget = kDefaultCharBudget;
  std::size_t max_text_chars = 200000;
  LocateOptions locate;
  std::string cors_origin = "*";
  Palette palette;
  LlmClientConfig llm;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  auto j = nlohmann::json::parse(content, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return j;
}

inline ServiceConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ServiceConfig c;
  auto path_of = [&](const char* key) -> std::filesystem::path {
    if (!j.contains(key) || j[key].is_null()) return {};
    std::filesystem::path p = j[key].get<std::string>();
    if (p.empty() || p.is_absolute()) return p;
    return base_dir / p;
  };
  try {
    c.port = j.value("port", c.port);
    c.host = j.value("host", c.host);
    c.provider = j.value("provider", c.provider);
    c.registry_path = path_of("registry_path");
    c.lexicon_path = path_of("lexicon_path");
    c.questionnaire_path = path_of("questionnaire_path");
    c.faq_path = path_of("faq_path");
    c.profile_store_path = path_of("profile_store_path");
    if (j.contains("metric")) c.metric = parse_metric(j["metric"].get<std::string>());
    c.thresholds = ScenarioThresholds::defaults(c.metric);
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      c.thresholds.confirmation_max = t.value("confirmation_max", c.thresholds.confirmation_max);
      c.thresholds.dissonance_min = t.value("dissonance_min", c.thresholds.dissonance_min);
    }
    c.thresholds.validate();
    c.gradual_horizon = j.value("gradual_horizon", c.gradual_horizon);
    if (c.gradual_horizon < 1) throw ConfigError("gradual_horizon must be at least 1");
    c.char_budget = j.value("char_budget", c.char_budget);
    if (c.char_budget == 0) throw ConfigError("char_budget must be positive");
    c.max_text_chars = j.value("max_text_chars", c.max_text_chars);
    c.locate.fuzzy_threshold = j.value("fuzzy_threshold", c.locate.fuzzy_threshold);
    if (!(c.locate.fuzzy_threshold > 0.0 && c.locate.fuzzy_threshold <= 1.0)) {
      throw ConfigError("fuzzy_threshold must be in (0, 1]");
    }
    c.cors_origin = j.value("cors_origin", c.cors_origin);
    if (j.contains("palette")) {
      std::array<Color, kTechniqueCount> colors;
      for (std::size_t i = 0; i < kTechniqueCount; ++i) colors[i] = Color{Palette::kDefault[i]};
      for (const auto& [name, hex] : j["palette"].items()) {
        colors[index_of(parse_technique(name))] = Color::parse(hex.get<std::string>());
      }
      c.palette = Palette(colors);
    }
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      c.llm.base_url = l.value("base_url", c.llm.base_url);
      c.llm.model = l.value("model", c.llm.model);
      c.llm.api_key_env = l.value("api_key_env", c.llm.api_key_env);
      c.llm.model_switching = l.value("model_switching", c.llm.model_switching);
      c.llm.max_in_flight = l.value("max_in_flight", c.llm.max_in_flight);
      c.llm.timeout_seconds = l.value("timeout_seconds", c.llm.timeout_seconds);
      c.llm.transport_retries = l.value("transport_retries", c.llm.transport_retries);
      c.llm.retry_backoff_ms = l.value("retry_backoff_ms", c.llm.retry_backoff_ms);
      c.llm.temperature = l.value("temperature", c.llm.temperature);
    }
    c.llm.char_budget = c.char_budget;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

inline ServiceConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path), std::filesystem::absolute(path).parent_path());
}

}  // namespace apollo
