#pragma once

// The analyze pipeline and the other request handlers, independent of the
// transport: the HTTP server and the CLI both call into AnalysisService and
// render its JSON the same way.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apollo/annotation.hpp"
#include "apollo/bias.hpp"
#include "apollo/config.hpp"
#include "apollo/detectors.hpp"
#include "apollo/error.hpp"
#include "apollo/llm.hpp"
#include "apollo/localizer.hpp"
#include "apollo/profile.hpp"

namespace apollo {

struct AnalyzeRequest {
  std::string text;
  std::optional<std::string> title;
  std::optional<std::string> user_id;
  std::optional<PersonalizationMode> mode_override;
  std::optional<std::string> provider;
};

inline AnalyzeRequest analyze_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw InvalidArgument(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  AnalyzeRequest r;
  const auto text = opt_string("text");
  if (!text) throw InvalidArgument("'text' is required");
  r.text = *text;
  r.title = opt_string("title");
  r.user_id = opt_string("user_id");
  r.provider = opt_string("provider");
  if (j.contains("mode_override") && !j["mode_override"].is_null()) r.mode_override = mode_from_json(j["mode_override"]);
  return r;
}

/// Canonical rendering shared by every front end, so identical results are
/// byte-identical wherever they are served.
inline std::string render(const nlohmann::json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

/// Everything the service loads at startup.
struct ServiceData {
  std::vector<ModelProfile> registry;
  std::vector<Lexicon> lexicons;
  std::vector<TestItem> questionnaire;
  std::string faq;
};

inline ServiceData load_service_data(const ServiceConfig& c) {
  ServiceData d;
  if (!c.registry_path.empty()) d.registry = registry_from_json(read_json_file(c.registry_path));
  if (!c.lexicon_path.empty()) d.lexicons = lexicons_from_json(read_json_file(c.lexicon_path));
  if (!c.questionnaire_path.empty()) d.questionnaire = questionnaire_from_json(read_json_file(c.questionnaire_path));
  if (!c.faq_path.empty()) d.faq = read_file(c.faq_path);
  return d;
}

class AnalysisService {
 public:
  /// `llm_transport` overrides the HTTP chat transport (tests use scripted stubs).
  AnalysisService(ServiceConfig config, ServiceData data, std::shared_ptr<ProfileStore> store,
                  std::shared_ptr<ChatTransport> llm_transport = nullptr)
      : config_(std::move(config)), data_(std::move(data)), store_(std::move(store)) {
    validate_registry(data_.registry);
    providers_["rule"] = std::make_shared<RuleProvider>(data_.lexicons);
    providers_["llm"] = llm_transport ? std::make_shared<LlmProvider>(config_.llm, std::move(llm_transport))
                                      : std::make_shared<LlmProvider>(config_.llm);
    if (!providers_.count(config_.provider)) throw ConfigError("unknown default provider: " + config_.provider);
  }

  const ServiceConfig& config() const noexcept { return config_; }
  const ServiceData& data() const noexcept { return data_; }
  ProfileStore& store() noexcept { return *store_; }

  nlohmann::json analyze(const AnalyzeRequest& req) {
    const std::size_t length = text::length(req.text);
    if (text::trim(text::decode(req.text)).empty()) throw InvalidArgument("'text' must not be empty");
    if (length > config_.max_text_chars) {
      throw InvalidArgument("'text' has " + std::to_string(length) + " characters; the limit is " +
                            std::to_string(config_.max_text_chars));
    }
    const std::string provider_id = req.provider.value_or(config_.provider);
    const auto pit = providers_.find(provider_id);
    if (pit == providers_.end()) throw InvalidArgument("unknown provider: " + provider_id);
    DetectionProvider& provider = *pit->second;

    std::optional<UserProfile> profile;
    if (req.user_id) profile = store_->get(*req.user_id);
    const std::optional<PoliticalPosition> user_position = profile ? profile->position : std::nullopt;

    // Request override, then the profile's mode, then the neutral default.
    const PersonalizationMode mode = req.mode_override.value_or(profile ? profile->mode : PersonalizationMode{});
    if (mode.requires_user_position() && !user_position) {
      throw MissingUserPosition("mode " + to_string(mode.kind()) + " requires a user with a stored political position");
    }
    long long sessions = profile ? profile->session_count : 0;
    if (mode.kind() == PersonalizationMode::Kind::Gradual) sessions = store_->bump_session(*req.user_id) - 1;
    const PoliticalPosition target = resolve_target(user_position, mode, sessions, config_.gradual_horizon);
    const PersonaDirective persona = build_persona_directive(target);

    const ProviderCapabilities caps = provider.capabilities();
    ModelProfile model;
    if (caps.supports_model_switching) {
      model = select_model(target, data_.registry, config_.metric);
    } else {
      model = registered_or_persona_profile(provider.default_model(), target);
    }

    const Article article(req.user_id.value_or("anonymous"), req.text, req.title);
    const bool persona_route = caps.supports_persona && !caps.supports_model_switching;
    ProviderResult result = provider.detect(article, persona_route ? &persona : nullptr, model.model_id);

    const Provenance provenance{provider.id() == "rule" ? "rule" : provider.id() + ":" + model.model_id,
                                persona.descriptor(), std::max(1, result.attempts)};
    std::vector<Detection> detections;
    std::vector<Unanchored> unanchored = std::move(result.rejected);
    for (const auto& part : result.parts) {
      Resolution r = resolve_all(part.raw, part.text, provenance, config_.locate);
      for (auto& d : r.detections) detections.push_back(d.shifted(part.offset, length));
      for (auto& u : r.unanchored) unanchored.push_back(std::move(u));
    }
    std::stable_sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
      return std::tuple(a.span().start, a.span().end, index_of(a.technique())) <
             std::tuple(b.span().start, b.span().end, index_of(b.technique()));
    });

    const BiasDisclosure disclosure =
        build_disclosure(user_position, persona, model, detections, config_.metric, config_.thresholds,
                         !caps.supports_model_switching);

    nlohmann::json response;
    response["detections"] = nlohmann::json::array();
    for (const auto& d : detections) response["detections"].push_back(to_json(d));
    response["unanchored"] = nlohmann::json::array();
    for (const auto& u : unanchored) response["unanchored"].push_back(to_json(u));
    response["disclosure"] = to_json(disclosure);
    response["disclosure"]["mode"] = to_json(mode);
    if (profile) response["disclosure"]["disclaimer_acknowledged"] = profile->disclaimer_acknowledged;
    response["colors"] = colors();
    return response;
  }

  nlohmann::json colors() const {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& t : kTaxonomy) c[std::string(t.canonical)] = config_.palette.color(t.id).hex();
    return c;
  }

  nlohmann::json models() const {
    if (data_.registry.empty()) throw EmptyRegistry();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : data_.registry) arr.push_back(to_json(m));
    return nlohmann::json{{"models", arr}};
  }

  const std::string& faq() const noexcept { return data_.faq; }

  nlohmann::json questionnaire() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : data_.questionnaire) arr.push_back(to_json(it));
    return nlohmann::json{{"items", arr},
                          {"scale", {{"min", -2}, {"max", 2}}},
                          {"note", "Example questionnaire for illustration; it has not been psychometrically validated."}};
  }

  nlohmann::json get_profile(const std::string& user_id) const { return to_json(store_->get(user_id)); }

  /// Full replacement of the stored profile (the session counter never decreases).
  nlohmann::json put_profile(const std::string& user_id, const nlohmann::json& body) {
    UserProfile p = profile_from_json(body, user_id);
    return to_json(store_->put(std::move(p)));
  }

  /// Scores the questionnaire and stores the resulting position, creating a
  /// neutral profile for unknown users.
  nlohmann::json political_test(const std::string& user_id, const nlohmann::json& body) {
    const nlohmann::json& responses = body.is_object() && body.contains("responses") ? body["responses"] : body;
    const PoliticalPosition pos = score_test(responses_from_json(responses), data_.questionnaire);
    UserProfile p = store_->find(user_id).value_or(UserProfile{});
    p.user_id = user_id;
    p.position = pos;
    const UserProfile stored = store_->put(std::move(p));
    return nlohmann::json{{"position", to_json(pos)}, {"profile", to_json(stored)}};
  }

 private:
  ModelProfile registered_or_persona_profile(const std::string& model_id, const PoliticalPosition& target) const {
    for (const auto& m : data_.registry) {
      if (m.model_id == model_id) return m;
    }
    return ModelProfile{model_id, target, quadrant_of(target), "not in registry; leaning set by the persona directive"};
  }

  ServiceConfig config_;
  ServiceData data_;
  std::shared_ptr<ProfileStore> store_;
  std::map<std::string, std::shared_ptr<DetectionProvider>> providers_;
};

}  // namespace apollo
