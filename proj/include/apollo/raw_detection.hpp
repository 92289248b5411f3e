#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "apollo/error.hpp"

namespace apollo {

/// Where a detector thinks the statement is: an approximate scalar offset, or
/// the few words that precede it.
using LocatorHint = std::variant<std::size_t, std::string>;

/// A detector claim before localization. The technique is still the raw name
/// the detector produced.
struct RawDetection {
  std::string statement;
  std::string technique_name;
  std::string explanation;
  std::optional<LocatorHint> locator_hint;

  friend bool operator==(const RawDetection&, const RawDetection&) = default;
};

inline nlohmann::json to_json(const RawDetection& r) {
  nlohmann::json j{{"statement", r.statement}, {"technique", r.technique_name}, {"explanation", r.explanation}};
  if (r.locator_hint) {
    if (const auto* off = std::get_if<std::size_t>(&*r.locator_hint)) j["locator_hint"] = *off;
    else j["locator_hint"] = std::get<std::string>(*r.locator_hint);
  }
  return j;
}

}  // namespace apollo
