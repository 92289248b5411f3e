#pragma once

// Political-compass geometry and the strategies that steer explanation
// leaning relative to a reader's own position.
//
// Positions live on the two-axis compass: economic in [-10, 10] (left
// negative) and social in [-10, 10] (libertarian negative). The distance
// between a reader and the active persona ("opinion difference") is bucketed
// into three scenarios: confirmation bias (low), middle, cognitive dissonance
// (high).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "apollo/annotation.hpp"
#include "apollo/error.hpp"
#include "apollo/technique.hpp"

namespace apollo {

inline constexpr double kAxisLimit = 10.0;

class PoliticalPosition {
 public:
  constexpr PoliticalPosition() = default;
  PoliticalPosition(double economic, double social) : economic_(economic), social_(social) {
    if (!in_bounds(economic) || !in_bounds(social)) {
      throw InvalidArgument("political position out of bounds: (" + std::to_string(economic) + ", " +
                            std::to_string(social) + ")");
    }
  }

  double economic() const noexcept { return economic_; }
  double social() const noexcept { return social_; }

  static bool in_bounds(double v) noexcept { return std::isfinite(v) && v >= -kAxisLimit && v <= kAxisLimit; }

  friend bool operator==(const PoliticalPosition&, const PoliticalPosition&) = default;

 private:
  double economic_ = 0.0;
  double social_ = 0.0;
};

inline std::string describe(const PoliticalPosition& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%.2f, %.2f)", p.economic(), p.social());
  return buf;
}

enum class Quadrant { AuthoritarianLeft, AuthoritarianRight, LibertarianLeft, LibertarianRight, Centrist };

inline std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::AuthoritarianLeft: return "AuthoritarianLeft";
    case Quadrant::AuthoritarianRight: return "AuthoritarianRight";
    case Quadrant::LibertarianLeft: return "LibertarianLeft";
    case Quadrant::LibertarianRight: return "LibertarianRight";
    case Quadrant::Centrist: return "Centrist";
  }
  return "?";
}

inline Quadrant parse_quadrant(std::string_view s) {
  for (auto q : {Quadrant::AuthoritarianLeft, Quadrant::AuthoritarianRight, Quadrant::LibertarianLeft,
                 Quadrant::LibertarianRight, Quadrant::Centrist}) {
    if (to_string(q) == s) return q;
  }
  throw InvalidArgument("unknown quadrant label: '" + std::string(s) + "'");
}

/// Sign-based quadrant. An axis sitting exactly at zero counts as its
/// left/libertarian side unless both are zero (Centrist).
inline Quadrant quadrant_of(const PoliticalPosition& p) noexcept {
  if (p.economic() == 0.0 && p.social() == 0.0) return Quadrant::Centrist;
  const bool right = p.economic() > 0.0;
  const bool authoritarian = p.social() > 0.0;
  if (authoritarian) return right ? Quadrant::AuthoritarianRight : Quadrant::AuthoritarianLeft;
  return right ? Quadrant::LibertarianRight : Quadrant::LibertarianLeft;
}

// Opinion difference ---------------------------------------------------------

enum class Metric { Euclidean, Chebyshev };

inline Metric parse_metric(std::string_view s) {
  if (s == "euclidean" || s == "Euclidean") return Metric::Euclidean;
  if (s == "chebyshev" || s == "Chebyshev") return Metric::Chebyshev;
  throw InvalidArgument("unknown metric: '" + std::string(s) + "'");
}

/// Largest possible opinion difference on the bounded compass.
inline double max_opinion_difference(Metric m = Metric::Euclidean) {
  return m == Metric::Euclidean ? std::sqrt(8.0 * kAxisLimit * kAxisLimit) : 2.0 * kAxisLimit;
}

inline double opinion_difference(const PoliticalPosition& user, const PoliticalPosition& model,
                                 Metric metric = Metric::Euclidean) {
  const double de = user.economic() - model.economic();
  const double ds = user.social() - model.social();
  if (metric == Metric::Chebyshev) return std::max(std::abs(de), std::abs(ds));
  return std::sqrt(de * de + ds * ds);
}

// Scenarios ------------------------------------------------------------------

enum class Scenario { ConfirmationBias, Middle, CognitiveDissonance };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::ConfirmationBias: return "ConfirmationBias";
    case Scenario::Middle: return "Middle";
    case Scenario::CognitiveDissonance: return "CognitiveDissonance";
  }
  return "?";
}

struct ScenarioThresholds {
  double confirmation_max;  // d <= this -> ConfirmationBias
  double dissonance_min;    // d >= this -> CognitiveDissonance

  /// 25% and 50% of the metric's maximal distance.
  static ScenarioThresholds defaults(Metric m = Metric::Euclidean) {
    const double max = max_opinion_difference(m);
    return {0.25 * max, 0.5 * max};
  }

  void validate() const {
    if (!(confirmation_max >= 0.0) || !(dissonance_min > confirmation_max)) {
      throw InvalidArgument("scenario thresholds must satisfy 0 <= confirmation_max < dissonance_min");
    }
  }
};

inline Scenario classify_scenario(double d, const ScenarioThresholds& t = ScenarioThresholds::defaults()) {
  if (!(d >= 0.0)) throw InvalidArgument("opinion difference must be non-negative");
  if (d <= t.confirmation_max) return Scenario::ConfirmationBias;
  if (d >= t.dissonance_min) return Scenario::CognitiveDissonance;
  return Scenario::Middle;
}

// Personalization ------------------------------------------------------------

class PersonalizationMode {
 public:
  enum class Kind { Neutral, Confirmatory, Opposing, Gradual, ExplicitChoice };

  constexpr PersonalizationMode() = default;
  static PersonalizationMode neutral() { return PersonalizationMode(Kind::Neutral); }
  static PersonalizationMode confirmatory() { return PersonalizationMode(Kind::Confirmatory); }
  static PersonalizationMode opposing() { return PersonalizationMode(Kind::Opposing); }
  static PersonalizationMode gradual() { return PersonalizationMode(Kind::Gradual); }
  static PersonalizationMode explicit_choice(PoliticalPosition target) {
    PersonalizationMode m(Kind::ExplicitChoice);
    m.target_ = target;
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  const std::optional<PoliticalPosition>& target() const noexcept { return target_; }
  bool requires_user_position() const noexcept {
    return kind_ == Kind::Confirmatory || kind_ == Kind::Opposing || kind_ == Kind::Gradual;
  }

  friend bool operator==(const PersonalizationMode&, const PersonalizationMode&) = default;

 private:
  constexpr explicit PersonalizationMode(Kind k) : kind_(k) {}
  Kind kind_ = Kind::Neutral;
  std::optional<PoliticalPosition> target_;
};

inline std::string to_string(PersonalizationMode::Kind k) {
  switch (k) {
    case PersonalizationMode::Kind::Neutral: return "Neutral";
    case PersonalizationMode::Kind::Confirmatory: return "Confirmatory";
    case PersonalizationMode::Kind::Opposing: return "Opposing";
    case PersonalizationMode::Kind::Gradual: return "Gradual";
    case PersonalizationMode::Kind::ExplicitChoice: return "ExplicitChoice";
  }
  return "?";
}

inline nlohmann::json to_json(const PoliticalPosition& p) {
  return nlohmann::json{{"economic", p.economic()}, {"social", p.social()}};
}

inline PoliticalPosition position_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("economic") || !j.contains("social") || !j["economic"].is_number() ||
      !j["social"].is_number()) {
    throw InvalidArgument("position must be an object with numeric 'economic' and 'social'");
  }
  return PoliticalPosition(j["economic"].get<double>(), j["social"].get<double>());
}

inline nlohmann::json to_json(const PersonalizationMode& m) {
  nlohmann::json j{{"mode", to_string(m.kind())}};
  if (m.target()) j["target"] = to_json(*m.target());
  return j;
}

inline PersonalizationMode::Kind parse_mode_kind(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "neutral") return PersonalizationMode::Kind::Neutral;
  if (lower == "confirmatory") return PersonalizationMode::Kind::Confirmatory;
  if (lower == "opposing") return PersonalizationMode::Kind::Opposing;
  if (lower == "gradual") return PersonalizationMode::Kind::Gradual;
  if (lower == "explicitchoice" || lower == "explicit_choice" || lower == "explicit") {
    return PersonalizationMode::Kind::ExplicitChoice;
  }
  throw InvalidArgument("unknown personalization mode: '" + std::string(s) + "'");
}

/// Accepts "Opposing" or {"mode": "ExplicitChoice", "target": {...}}.
inline PersonalizationMode mode_from_json(const nlohmann::json& j) {
  const bool is_object = j.is_object();
  if (!j.is_string() && !(is_object && j.contains("mode") && j["mode"].is_string())) {
    throw InvalidArgument("mode must be a string or an object with a 'mode' field");
  }
  const auto kind = parse_mode_kind(is_object ? j["mode"].get<std::string>() : j.get<std::string>());
  switch (kind) {
    case PersonalizationMode::Kind::Neutral: return PersonalizationMode::neutral();
    case PersonalizationMode::Kind::Confirmatory: return PersonalizationMode::confirmatory();
    case PersonalizationMode::Kind::Opposing: return PersonalizationMode::opposing();
    case PersonalizationMode::Kind::Gradual: return PersonalizationMode::gradual();
    case PersonalizationMode::Kind::ExplicitChoice:
      if (!is_object || !j.contains("target")) throw InvalidArgument("ExplicitChoice requires a target position");
      return PersonalizationMode::explicit_choice(position_from_json(j["target"]));
  }
  throw InvalidArgument("unreachable mode");
}

/// Fraction of the way from confirmatory to opposing after `sessions` sessions.
inline double gradual_alpha(long long sessions, long long horizon = 20) {
  if (horizon < 1) throw InvalidArgument("gradual horizon must be at least 1");
  if (sessions < 0) throw InvalidArgument("session count must be non-negative");
  return std::min(1.0, static_cast<double>(sessions) / static_cast<double>(horizon));
}

/// Point reflection through the compass origin.
inline PoliticalPosition antipode(const PoliticalPosition& p) { return PoliticalPosition(-p.economic(), -p.social()); }

inline PoliticalPosition resolve_target(const std::optional<PoliticalPosition>& user, const PersonalizationMode& mode,
                                        long long session_count, long long horizon = 20) {
  using Kind = PersonalizationMode::Kind;
  if (mode.requires_user_position() && !user) {
    throw MissingUserPosition("mode " + to_string(mode.kind()) + " requires a stored political position");
  }
  switch (mode.kind()) {
    case Kind::Neutral: return PoliticalPosition(0.0, 0.0);
    case Kind::Confirmatory: return *user;
    case Kind::Opposing: return antipode(*user);
    case Kind::ExplicitChoice: return *mode.target();
    case Kind::Gradual: {
      const double a = gradual_alpha(session_count, horizon);
      const PoliticalPosition opp = antipode(*user);
      auto lerp = [a](double from, double to) { return a == 1.0 ? to : from + a * (to - from); };
      return PoliticalPosition(lerp(user->economic(), opp.economic()), lerp(user->social(), opp.social()));
    }
  }
  throw InvalidArgument("unreachable mode");
}

// Model registry -------------------------------------------------------------

struct ModelProfile {
  std::string model_id;
  PoliticalPosition position;
  Quadrant label = Quadrant::Centrist;
  std::string note;
  friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

inline nlohmann::json to_json(const ModelProfile& m) {
  return nlohmann::json{{"model_id", m.model_id},
                        {"economic", m.position.economic()},
                        {"social", m.position.social()},
                        {"label", to_string(m.label)},
                        {"note", m.note}};
}

/// Checks id uniqueness and that every label agrees with its position.
inline void validate_registry(const std::vector<ModelProfile>& registry) {
  std::set<std::string> ids;
  for (const auto& m : registry) {
    if (m.model_id.empty()) throw InvalidRegistry("registry entry with empty model_id");
    if (!ids.insert(m.model_id).second) throw InvalidRegistry("duplicate model_id in registry: " + m.model_id);
    if (quadrant_of(m.position) != m.label) {
      throw InvalidRegistry("registry entry " + m.model_id + " is labeled " + to_string(m.label) +
                            " but its position " + describe(m.position) + " lies in " +
                            to_string(quadrant_of(m.position)));
    }
  }
}

inline std::vector<ModelProfile> registry_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidRegistry("model registry must be a JSON array");
  std::vector<ModelProfile> out;
  for (const auto& e : j) {
    try {
      out.push_back(ModelProfile{e.at("model_id").get<std::string>(),
                                 PoliticalPosition(e.at("economic").get<double>(), e.at("social").get<double>()),
                                 parse_quadrant(e.at("label").get<std::string>()), e.value("note", std::string{})});
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidRegistry(std::string("malformed registry entry: ") + ex.what());
    } catch (const InvalidArgument& ex) {
      throw InvalidRegistry(std::string("invalid registry entry: ") + ex.what());
    }
  }
  validate_registry(out);
  return out;
}

/// Profile nearest the target; equal distances go to the smallest model_id.
inline const ModelProfile& select_model(const PoliticalPosition& target, const std::vector<ModelProfile>& registry,
                                        Metric metric = Metric::Euclidean) {
  if (registry.empty()) throw EmptyRegistry();
  // Squared Euclidean keeps ties exact for grid-aligned positions.
  auto key = [&](const ModelProfile& m) {
    const double de = target.economic() - m.position.economic();
    const double ds = target.social() - m.position.social();
    return metric == Metric::Euclidean ? de * de + ds * ds : std::max(std::abs(de), std::abs(ds));
  };
  const ModelProfile* best = &registry.front();
  double best_key = key(*best);
  for (const auto& m : registry) {
    const double k = key(m);
    if (k < best_key || (k == best_key && m.model_id < best->model_id)) {
      best = &m;
      best_key = k;
    }
  }
  return *best;
}

// Persona --------------------------------------------------------------------

struct PersonaDirective {
  PoliticalPosition target;
  std::string text;

  /// Short provenance tag, e.g. "AuthoritarianRight (5.00, 5.00)".
  std::string descriptor() const { return to_string(quadrant_of(target)) + " " + describe(target); }
};

inline PersonaDirective build_persona_directive(const PoliticalPosition& target) {
  const Quadrant q = quadrant_of(target);
  if (q == Quadrant::Centrist) return {target, "Explain from a politically neutral, centrist standpoint."};
  const bool authoritarian = q == Quadrant::AuthoritarianLeft || q == Quadrant::AuthoritarianRight;
  const bool right = q == Quadrant::AuthoritarianRight || q == Quadrant::LibertarianRight;
  std::string text = "Explain as if you were a model that has more ";
  text += authoritarian ? "authoritarian " : "libertarian ";
  text += right ? "right-wing" : "left-wing";
  text += " views.";
  return {target, std::move(text)};
}

// Disclosure -----------------------------------------------------------------

inline constexpr std::string_view kDisclaimer =
    "Explanations in this analysis are written by a language model, and language models carry political "
    "leanings of their own. The persona and model label shown here tell you which viewpoint the explanations "
    "were steered toward. The neutral setting is itself a chosen centrist reference point on the political "
    "compass rather than an objective standard. Treat each highlight as a prompt for your own judgement.";

struct BiasDisclosure {
  PoliticalPosition persona_target;
  std::string persona_text;
  std::string model_id;
  Quadrant model_label = Quadrant::Centrist;
  std::optional<double> opinion_difference;
  std::optional<Scenario> scenario;
  std::map<Technique, int> technique_counts;
  std::string disclaimer;
};

/// The opinion difference is measured against the leaning the explanations
/// were produced with: the persona target when the persona was sent to the
/// model, otherwise the selected model's registry position.
inline BiasDisclosure build_disclosure(const std::optional<PoliticalPosition>& user, const PersonaDirective& persona,
                                       const ModelProfile& model, const std::vector<Detection>& detections,
                                       Metric metric = Metric::Euclidean,
                                       const ScenarioThresholds& thresholds = ScenarioThresholds::defaults(),
                                       bool persona_applied = true) {
  BiasDisclosure d;
  d.persona_target = persona.target;
  d.persona_text = persona.text;
  d.model_id = model.model_id;
  d.model_label = model.label;
  if (user) {
    d.opinion_difference = opinion_difference(*user, persona_applied ? persona.target : model.position, metric);
    d.scenario = classify_scenario(*d.opinion_difference, thresholds);
  }
  for (const auto& det : detections) ++d.technique_counts[det.technique()];
  d.disclaimer = std::string(kDisclaimer);
  return d;
}

inline nlohmann::json to_json(const BiasDisclosure& d) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [t, n] : d.technique_counts) counts[to_string(t)] = n;
  nlohmann::json j{{"persona_target", to_json(d.persona_target)},
                   {"persona", d.persona_text},
                   {"model_id", d.model_id},
                   {"model_label", to_string(d.model_label)},
                   {"technique_counts", counts},
                   {"disclaimer", d.disclaimer}};
  if (d.opinion_difference) j["opinion_difference"] = *d.opinion_difference;
  if (d.scenario) j["scenario"] = to_string(*d.scenario);
  return j;
}

}  // namespace apollo
