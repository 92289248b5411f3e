#pragma once

// The propaganda-technique taxonomy: canonical ids, display names, the alias
// table used to canonicalize model output, and the highlight palette.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "apollo/error.hpp"
#include "apollo/text.hpp"

namespace apollo {

enum class Technique : std::uint8_t {
  Loaded_Language,
  Name_Calling,
  Repetition,
  Exaggeration_Minimisation,
  Doubt,
  Appeal_to_Fear,
  Flag_Waving,
  Causal_Oversimplification,
  Slogans,
  Appeal_to_Authority,
  Black_and_White_Fallacy,
  Thought_Terminating_Cliche,
  Whataboutism,
  Reductio_ad_Hitlerum,
  Red_Herring,
  Bandwagon,
  Obfuscation,
  Straw_Man,
};

inline constexpr std::size_t kTechniqueCount = 18;

struct TechniqueInfo {
  Technique id;
  std::string_view canonical;  // serialized form, e.g. "Loaded_Language"
  std::string_view display_name;
  std::string_view description;
};

inline constexpr std::array<TechniqueInfo, kTechniqueCount> kTaxonomy{{
    {Technique::Loaded_Language, "Loaded_Language", "Loaded Language",
     "Words or phrases with strong emotional implications used to influence the reader."},
    {Technique::Name_Calling, "Name_Calling", "Name Calling/Labeling",
     "Labeling the target as something the audience fears, hates or finds undesirable."},
    {Technique::Repetition, "Repetition", "Repetition",
     "Repeating the same message over and over so the audience comes to accept it."},
    {Technique::Exaggeration_Minimisation, "Exaggeration_Minimisation", "Exaggeration/Minimisation",
     "Representing something as better, worse, larger or smaller than it really is."},
    {Technique::Doubt, "Doubt", "Doubt", "Questioning the credibility of someone or something."},
    {Technique::Appeal_to_Fear, "Appeal_to_Fear", "Appeal to Fear/Prejudice",
     "Building support for an idea by instilling anxiety or panic about an alternative."},
    {Technique::Flag_Waving, "Flag_Waving", "Flag-Waving",
     "Playing on strong national or group feeling to justify an action or idea."},
    {Technique::Causal_Oversimplification, "Causal_Oversimplification", "Causal Oversimplification",
     "Assuming a single cause or reason when there are actually multiple causes."},
    {Technique::Slogans, "Slogans", "Slogans",
     "A brief and striking phrase that may include labeling and stereotyping."},
    {Technique::Appeal_to_Authority, "Appeal_to_Authority", "Appeal to Authority",
     "Stating that a claim is true simply because an authority says so."},
    {Technique::Black_and_White_Fallacy, "Black_and_White_Fallacy", "Black-and-White Fallacy",
     "Presenting two alternatives as the only possibilities when more exist."},
    {Technique::Thought_Terminating_Cliche, "Thought_Terminating_Cliche", "Thought-Terminating Cliché",
     "Short generic phrases that discourage critical thought and meaningful discussion."},
    {Technique::Whataboutism, "Whataboutism", "Whataboutism",
     "Discrediting a position by charging the opponent with hypocrisy without refuting it."},
    {Technique::Reductio_ad_Hitlerum, "Reductio_ad_Hitlerum", "Reductio ad Hitlerum",
     "Discrediting an idea by associating it with a group held in contempt."},
    {Technique::Red_Herring, "Red_Herring", "Red Herring",
     "Introducing irrelevant material to divert attention from the issue at hand."},
    {Technique::Bandwagon, "Bandwagon", "Bandwagon",
     "Persuading the audience to join in because everyone else is doing so."},
    {Technique::Obfuscation, "Obfuscation", "Obfuscation/Intentional Vagueness",
     "Using deliberately unclear words so the audience can read its own meaning into them."},
    {Technique::Straw_Man, "Straw_Man", "Straw Man",
     "Replacing an opponent's position with a distorted one and refuting that instead."},
}};

inline constexpr std::size_t index_of(Technique t) noexcept { return static_cast<std::size_t>(t); }

inline constexpr const TechniqueInfo& info(Technique t) noexcept { return kTaxonomy[index_of(t)]; }

inline std::string to_string(Technique t) { return std::string(info(t).canonical); }

inline std::string_view display_name(Technique t) noexcept { return info(t).display_name; }

namespace detail {

// Lower-cases and unifies ' ', '-', '_' into a single '_' (runs collapse),
// with leading/trailing separators dropped.
inline std::string technique_key(std::string_view name) {
  const std::u32string cps = text::decode(text::trim_ascii(name));
  std::u32string key;
  key.reserve(cps.size());
  bool pending_sep = false;
  for (char32_t c : cps) {
    if (c == U' ' || c == U'-' || c == U'_' || text::is_space(c)) {
      pending_sep = !key.empty();
      continue;
    }
    if (pending_sep) key.push_back(U'_');
    pending_sep = false;
    key.push_back(text::fold_case(c));
  }
  return text::encode(key);
}

struct Alias {
  std::string_view name;
  Technique id;
};

// Common variants seen in model output and in the SemEval label sets.
inline constexpr std::array kAliases{
    Alias{"Name Calling/Labeling", Technique::Name_Calling},
    Alias{"Name_Calling,Labeling", Technique::Name_Calling},
    Alias{"Labeling", Technique::Name_Calling},
    Alias{"Name Calling", Technique::Name_Calling},
    Alias{"Exaggeration/Minimisation", Technique::Exaggeration_Minimisation},
    Alias{"Exaggeration/Minimization", Technique::Exaggeration_Minimisation},
    Alias{"Exaggeration,Minimisation", Technique::Exaggeration_Minimisation},
    Alias{"Exaggeration_Minimization", Technique::Exaggeration_Minimisation},
    Alias{"Exaggeration or Minimisation", Technique::Exaggeration_Minimisation},
    Alias{"Exaggeration", Technique::Exaggeration_Minimisation},
    Alias{"Minimisation", Technique::Exaggeration_Minimisation},
    Alias{"Minimization", Technique::Exaggeration_Minimisation},
    Alias{"Appeal to Fear/Prejudice", Technique::Appeal_to_Fear},
    Alias{"Appeal_to_fear-prejudice", Technique::Appeal_to_Fear},
    Alias{"Appeal to Prejudice", Technique::Appeal_to_Fear},
    Alias{"Fear Appeal", Technique::Appeal_to_Fear},
    Alias{"Flag Waving", Technique::Flag_Waving},
    Alias{"Appeal to Patriotism", Technique::Flag_Waving},
    Alias{"Oversimplification", Technique::Causal_Oversimplification},
    Alias{"Slogan", Technique::Slogans},
    Alias{"Black-and-White Fallacy/Dictatorship", Technique::Black_and_White_Fallacy},
    Alias{"Black and White Fallacy", Technique::Black_and_White_Fallacy},
    Alias{"False Dilemma", Technique::Black_and_White_Fallacy},
    Alias{"False Dichotomy", Technique::Black_and_White_Fallacy},
    Alias{"Dictatorship", Technique::Black_and_White_Fallacy},
    Alias{"Thought-Terminating Cliché", Technique::Thought_Terminating_Cliche},
    Alias{"Thought-terminating Cliches", Technique::Thought_Terminating_Cliche},
    Alias{"Thought-terminating Clichés", Technique::Thought_Terminating_Cliche},
    Alias{"Casting Doubt", Technique::Doubt},
    Alias{"Straw Men", Technique::Straw_Man},
    Alias{"Straw_Men", Technique::Straw_Man},
    Alias{"Strawman", Technique::Straw_Man},
    Alias{"Appeal to Popularity", Technique::Bandwagon},
    Alias{"Obfuscation/Intentional Vagueness", Technique::Obfuscation},
    Alias{"Obfuscation,Intentional_Vagueness,Confusion", Technique::Obfuscation},
    Alias{"Obfuscation, Intentional Vagueness, Confusion", Technique::Obfuscation},
    Alias{"Intentional Vagueness", Technique::Obfuscation},
    Alias{"Vagueness", Technique::Obfuscation},
    Alias{"Reductio ad Hitlerum", Technique::Reductio_ad_Hitlerum},
    Alias{"Appeal to Hypocrisy", Technique::Whataboutism},
};

}  // namespace detail

inline std::optional<Technique> try_parse_technique(std::string_view name) {
  const std::string key = detail::technique_key(name);
  if (key.empty()) return std::nullopt;
  for (const auto& t : kTaxonomy) {
    if (detail::technique_key(t.canonical) == key) return t.id;
  }
  for (const auto& a : detail::kAliases) {
    if (detail::technique_key(a.name) == key) return a.id;
  }
  return std::nullopt;
}

/// Canonicalizes a technique name; throws UnknownTechnique if it is neither a
/// canonical id (modulo case and ' '/'-'/'_') nor a known alias.
inline Technique parse_technique(std::string_view name) {
  if (auto t = try_parse_technique(name)) return *t;
  throw UnknownTechnique(std::string(name));
}

/// 24-bit RGB highlight color, rendered as "#rrggbb".
struct Color {
  std::uint32_t rgb = 0;

  friend constexpr bool operator==(Color, Color) = default;

  std::string hex() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%06x", static_cast<unsigned>(rgb & 0xFFFFFF));
    return buf;
  }

  /// Accepts "#rrggbb" or "rrggbb" (either case).
  static Color parse(std::string_view s) {
    if (!s.empty() && s.front() == '#') s.remove_prefix(1);
    if (s.size() != 6) throw InvalidArgument("color must have 6 hex digits: '" + std::string(s) + "'");
    std::uint32_t v = 0;
    for (char c : s) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
      else throw InvalidArgument("invalid hex digit in color: '" + std::string(s) + "'");
    }
    return Color{v};
  }
};

/// One color per technique. The default entries are a high-contrast set;
/// overrides from configuration must keep the palette injective.
class Palette {
 public:
  static constexpr std::array<std::uint32_t, kTechniqueCount> kDefault{
      0xe6194b, 0x3cb44b, 0xffe119, 0x4363d8, 0xf58231, 0x911eb4,
      0x46f0f0, 0xf032e6, 0xbcf60c, 0xfabebe, 0x008080, 0xe6beff,
      0x9a6324, 0xfffac8, 0x800000, 0xaaffc3, 0x808000, 0xffd8b1,
  };

  Palette() {
    for (std::size_t i = 0; i < kTechniqueCount; ++i) colors_[i] = Color{kDefault[i]};
  }

  explicit Palette(const std::array<Color, kTechniqueCount>& colors) : colors_(colors) {
    for (std::size_t i = 0; i < kTechniqueCount; ++i) {
      for (std::size_t j = i + 1; j < kTechniqueCount; ++j) {
        if (colors_[i] == colors_[j]) {
          throw InvalidArgument("palette assigns " + colors_[i].hex() + " to both " +
                                std::string(kTaxonomy[i].canonical) + " and " +
                                std::string(kTaxonomy[j].canonical));
        }
      }
    }
  }

  Color color(Technique t) const noexcept { return colors_[index_of(t)]; }

  void set(Technique t, Color c) {
    for (std::size_t i = 0; i < kTechniqueCount; ++i) {
      if (i != index_of(t) && colors_[i] == c) {
        throw InvalidArgument("palette color " + c.hex() + " already assigned to " +
                              std::string(kTaxonomy[i].canonical));
      }
    }
    colors_[index_of(t)] = c;
  }

 private:
  std::array<Color, kTechniqueCount> colors_;
};

inline Color technique_color(Technique t, const Palette& palette = Palette{}) {
  return palette.color(t);
}

}  // namespace apollo
