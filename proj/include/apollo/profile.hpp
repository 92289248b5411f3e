#pragma once

// User profiles and the political-orientation questionnaire.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apollo/bias.hpp"
#include "apollo/error.hpp"

namespace apollo {

struct UserProfile {
  std::string user_id;
  std::optional<PoliticalPosition> position;
  PersonalizationMode mode;
  long long session_count = 0;
  bool disclaimer_acknowledged = false;
  std::string updated_at;  // ISO-8601 UTC

  void validate() const {
    if (user_id.empty()) throw InvalidProfile("user_id must not be empty");
    if (session_count < 0) throw InvalidProfile("session_count must be non-negative");
    if (mode.requires_user_position() && !position) {
      throw InvalidProfile("mode " + to_string(mode.kind()) + " requires a political position");
    }
  }

  /// Equality ignoring updated_at.
  bool same_content(const UserProfile& o) const {
    return user_id == o.user_id && position == o.position && mode == o.mode && session_count == o.session_count &&
           disclaimer_acknowledged == o.disclaimer_acknowledged;
  }
};

inline nlohmann::json to_json(const UserProfile& p) {
  nlohmann::json j{{"user_id", p.user_id},
                   {"mode", to_json(p.mode)},
                   {"session_count", p.session_count},
                   {"disclaimer_acknowledged", p.disclaimer_acknowledged},
                   {"updated_at", p.updated_at}};
  j["position"] = p.position ? to_json(*p.position) : nlohmann::json(nullptr);
  return j;
}

inline UserProfile profile_from_json(const nlohmann::json& j, const std::string& user_id) {
  if (!j.is_object()) throw InvalidArgument("profile must be a JSON object");
  UserProfile p;
  p.user_id = user_id;
  if (j.contains("position") && !j["position"].is_null()) p.position = position_from_json(j["position"]);
  if (j.contains("mode")) p.mode = mode_from_json(j["mode"]);
  if (j.contains("session_count")) {
    if (!j["session_count"].is_number_integer()) throw InvalidArgument("session_count must be an integer");
    p.session_count = j["session_count"].get<long long>();
  }
  if (j.contains("disclaimer_acknowledged")) {
    if (!j["disclaimer_acknowledged"].is_boolean()) throw InvalidArgument("disclaimer_acknowledged must be a boolean");
    p.disclaimer_acknowledged = j["disclaimer_acknowledged"].get<bool>();
  }
  p.updated_at = j.value("updated_at", std::string{});
  return p;
}

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Questionnaire --------------------------------------------------------------

enum class Axis { Economic, Social };

struct TestItem {
  std::string id;
  std::string statement;
  Axis axis = Axis::Economic;
  int polarity = 1;  // +1 agreeing moves right/authoritarian, -1 the opposite
};

struct TestResponse {
  std::string item_id;
  int value = 0;  // Likert, -2 strongly disagree .. +2 strongly agree
};

inline std::vector<TestItem> questionnaire_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("questionnaire must be a JSON array");
  std::vector<TestItem> items;
  std::set<std::string> ids;
  int per_axis[2] = {0, 0};
  for (const auto& e : j) {
    try {
      TestItem it;
      it.id = e.at("id").get<std::string>();
      it.statement = e.at("statement").get<std::string>();
      const auto axis = e.at("axis").get<std::string>();
      if (axis == "economic") it.axis = Axis::Economic;
      else if (axis == "social") it.axis = Axis::Social;
      else throw ConfigError("questionnaire item " + it.id + " has unknown axis '" + axis + "'");
      it.polarity = e.at("polarity").get<int>();
      if (it.polarity != 1 && it.polarity != -1) throw ConfigError("questionnaire item " + it.id + " polarity must be +1 or -1");
      if (!ids.insert(it.id).second) throw ConfigError("duplicate questionnaire item id " + it.id);
      ++per_axis[it.axis == Axis::Economic ? 0 : 1];
      items.push_back(std::move(it));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("malformed questionnaire item: ") + ex.what());
    }
  }
  if (per_axis[0] < 1 || per_axis[1] < 1) throw ConfigError("questionnaire needs items on both axes");
  return items;
}

inline nlohmann::json to_json(const TestItem& it) {
  return nlohmann::json{{"id", it.id},
                        {"statement", it.statement},
                        {"axis", it.axis == Axis::Economic ? "economic" : "social"},
                        {"polarity", it.polarity}};
}

/// Accepts [{item_id, value}] or {item_id: value}.
inline std::vector<TestResponse> responses_from_json(const nlohmann::json& j) {
  std::vector<TestResponse> out;
  auto value_of = [](const nlohmann::json& v, const std::string& id) {
    if (!v.is_number_integer()) throw InvalidArgument("response for " + id + " must be an integer");
    return v.get<int>();
  };
  if (j.is_object()) {
    for (const auto& [id, v] : j.items()) out.push_back({id, value_of(v, id)});
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_object() || !e.contains("item_id") || !e["item_id"].is_string() || !e.contains("value")) {
        throw InvalidArgument("each response needs 'item_id' and 'value'");
      }
      const auto id = e["item_id"].get<std::string>();
      out.push_back({id, value_of(e["value"], id)});
    }
  } else {
    throw InvalidArgument("responses must be an array or an object");
  }
  return out;
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// Per axis: 10 * mean(polarity * response) / 2, rounded to two decimals.
inline PoliticalPosition score_test(const std::vector<TestResponse>& responses, const std::vector<TestItem>& items) {
  std::map<std::string, const TestItem*> by_id;
  for (const auto& it : items) by_id[it.id] = &it;
  std::map<std::string, int> answers;
  for (const auto& r : responses) {
    if (!by_id.count(r.item_id)) throw InvalidArgument("response references unknown item " + r.item_id);
    if (r.value < -2 || r.value > 2) throw InvalidArgument("response for " + r.item_id + " must be in [-2, 2]");
    if (!answers.emplace(r.item_id, r.value).second) throw InvalidArgument("item " + r.item_id + " answered twice");
  }
  std::vector<std::string> missing;
  for (const auto& it : items) {
    if (!answers.count(it.id)) missing.push_back(it.id);
  }
  if (!missing.empty()) throw IncompleteResponses(std::move(missing));

  double sum[2] = {0, 0};
  int count[2] = {0, 0};
  for (const auto& it : items) {
    const int a = it.axis == Axis::Economic ? 0 : 1;
    sum[a] += it.polarity * answers[it.id];
    ++count[a];
  }
  auto axis_score = [&](int a) { return count[a] == 0 ? 0.0 : round2(10.0 * (sum[a] / count[a]) / 2.0); };
  return PoliticalPosition(axis_score(0), axis_score(1));
}

// Store ----------------------------------------------------------------------

/// Linearizable profile storage. With a path, every write is persisted as a
/// versioned JSON document via temp file + rename; without, it is in-memory.
class ProfileStore {
 public:
  static constexpr const char* kVersion = "v1";

  ProfileStore() = default;

  explicit ProfileStore(std::filesystem::path path) : path_(std::move(path)) {
    if (!path_.empty() && std::filesystem::exists(path_)) load();
  }

  ProfileStore(const ProfileStore&) = delete;
  ProfileStore& operator=(const ProfileStore&) = delete;

  UserProfile get(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    const auto it = profiles_.find(user_id);
    if (it == profiles_.end()) throw NotFound("unknown user: " + user_id);
    return it->second;
  }

  std::optional<UserProfile> find(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    const auto it = profiles_.find(user_id);
    if (it == profiles_.end()) return std::nullopt;
    return it->second;
  }

  /// Stores the profile. The session counter never goes backwards: the stored
  /// count is the larger of the existing and the submitted one.
  UserProfile put(UserProfile profile) {
    profile.validate();
    std::unique_lock lock(mutex_);
    if (const auto it = profiles_.find(profile.user_id); it != profiles_.end()) {
      profile.session_count = std::max(profile.session_count, it->second.session_count);
    }
    profile.updated_at = utc_now_iso8601();
    profiles_[profile.user_id] = profile;
    persist();
    return profile;
  }

  long long bump_session(const std::string& user_id) {
    std::unique_lock lock(mutex_);
    const auto it = profiles_.find(user_id);
    if (it == profiles_.end()) throw NotFound("unknown user: " + user_id);
    ++it->second.session_count;
    it->second.updated_at = utc_now_iso8601();
    persist();
    return it->second.session_count;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return profiles_.size();
  }

  nlohmann::json to_json_document() const {
    std::shared_lock lock(mutex_);
    return document();
  }

 private:
  nlohmann::json document() const {
    nlohmann::json profiles = nlohmann::json::object();
    for (const auto& [id, p] : profiles_) profiles[id] = to_json(p);
    return nlohmann::json{{"version", kVersion}, {"profiles", profiles}};
  }

  void load() {
    std::ifstream in(path_);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("profile store " + path_.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || doc.value("version", std::string{}) != kVersion || !doc.contains("profiles") ||
        !doc["profiles"].is_object()) {
      throw ConfigError("profile store " + path_.string() + " is not a v1 document");
    }
    for (const auto& [id, j] : doc["profiles"].items()) {
      UserProfile p = profile_from_json(j, id);
      p.validate();
      profiles_[id] = std::move(p);
    }
  }

  void persist() const {
    if (path_.empty()) return;
    const auto tmp = std::filesystem::path(path_.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error("cannot write profile store " + tmp.string());
      out << document().dump(2) << '\n';
      out.flush();
      if (!out) throw Error("failed writing profile store " + tmp.string());
    }
    std::filesystem::rename(tmp, path_);
  }

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, UserProfile> profiles_;
};

}  // namespace apollo
