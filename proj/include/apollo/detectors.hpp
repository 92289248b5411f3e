#pragma once

// Detection providers produce RawDetections for an article. This header holds
// the provider interface, the prompt documents for the chat-completion route,
// the structured-output parser, the deterministic lexicon provider, and
// paragraph chunking.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apollo/annotation.hpp"
#include "apollo/bias.hpp"
#include "apollo/error.hpp"
#include "apollo/localizer.hpp"
#include "apollo/raw_detection.hpp"
#include "apollo/technique.hpp"
#include "apollo/text.hpp"

namespace apollo {

inline constexpr std::size_t kDefaultCharBudget = 12000;

// Prompts --------------------------------------------------------------------

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct PromptDocument {
  std::string system;
  std::string user;

  std::vector<ChatMessage> messages() const { return {{"system", system}, {"user", user}}; }
};

namespace detail {

inline std::string technique_list() {
  std::string out;
  for (const auto& t : kTaxonomy) {
    if (!out.empty()) out += ", ";
    out += t.canonical;
  }
  return out;
}

inline std::string with_persona(const PersonaDirective* persona, const std::string& directive) {
  if (!persona) return directive;
  return persona->text + "\n\n" + directive;
}

inline std::string article_message(const Article& article) {
  std::string msg;
  if (article.title && !article.title->empty()) msg += "Title: " + *article.title + "\n\n";
  msg += "Article:\n" + article.body;
  return msg;
}

inline void check_budget(const Article& article, std::size_t char_budget) {
  const std::size_t n = text::length(article.body);
  if (n > char_budget) throw BodyTooLarge(n, char_budget);
}

}  // namespace detail

inline const std::string& detection_output_contract() {
  static const std::string s =
      "Answer with a JSON array and nothing else. Each element must be an object with the string fields "
      "\"statement\" (the statement copied exactly, character for character, from the article), "
      "\"technique\" (one canonical technique name from the list) and \"explanation\" (one or two sentences "
      "on why the statement is an instance of that technique). Return [] when the article contains no "
      "propaganda techniques.";
  return s;
}

/// Single-document form of the two-phase instruction: identify the techniques
/// present, then quote, classify and explain each instance.
inline PromptDocument build_detection_prompt(const Article& article, const PersonaDirective* persona = nullptr,
                                             std::size_t char_budget = kDefaultCharBudget) {
  detail::check_budget(article, char_budget);
  const std::string directive =
      "You analyze news articles for propaganda techniques. Only use these technique names: " +
      detail::technique_list() +
      ".\nPhase 1: decide which of these techniques are present in the article.\n"
      "Phase 2: for every technique found in phase 1, list each statement in the article that uses it.\n" +
      detection_output_contract();
  return {detail::with_persona(persona, directive), detail::article_message(article)};
}

/// Phase 1 of the exchange: which techniques appear at all.
inline PromptDocument build_identification_prompt(const Article& article, const PersonaDirective* persona = nullptr,
                                                  std::size_t char_budget = kDefaultCharBudget) {
  detail::check_budget(article, char_budget);
  const std::string directive =
      "You analyze news articles for propaganda techniques. Only use these technique names: " +
      detail::technique_list() +
      ".\nIdentify which of these techniques are present in the article. Answer with a JSON array of "
      "technique names and nothing else, for example [\"Loaded_Language\", \"Doubt\"]. Return [] when none "
      "are present.";
  return {detail::with_persona(persona, directive), detail::article_message(article)};
}

/// Phase 2 request, carrying phase 1's technique list.
inline std::string build_explanation_request(const std::vector<Technique>& techniques) {
  std::string list;
  for (auto t : techniques) {
    if (!list.empty()) list += ", ";
    list += to_string(t);
  }
  return "You identified these techniques: " + list +
         ".\nFor each of them, find every statement in the article that uses it and explain why. " +
         detection_output_contract();
}

inline const std::string& format_reminder() {
  static const std::string s =
      "Your previous reply could not be parsed. Reply again with only the JSON array described above: no code "
      "fences, no commentary before or after it.";
  return s;
}

// Structured output ----------------------------------------------------------

struct RejectedEntry {
  nlohmann::json entry;
  std::string reason;
};

struct ParsedOutput {
  std::vector<RawDetection> detections;
  std::vector<RejectedEntry> rejected;
};

namespace detail {

/// Parses `raw` as a JSON array, applying one repair pass (drop everything
/// before the first '[' and after the last ']', which removes code fences and
/// surrounding prose) if the first attempt fails.
inline nlohmann::json parse_array_lenient(std::string_view raw) {
  auto try_parse = [](std::string_view s) -> std::optional<nlohmann::json> {
    auto j = nlohmann::json::parse(s.begin(), s.end(), nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(raw)) return *j;
  const auto open = raw.find('[');
  const auto close = raw.rfind(']');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    if (auto j = try_parse(raw.substr(open, close - open + 1))) return *j;
  }
  throw MalformedOutput("model output is not a JSON array");
}

}  // namespace detail

inline ParsedOutput parse_llm_output(std::string_view raw) {
  const nlohmann::json doc = detail::parse_array_lenient(raw);
  ParsedOutput out;
  for (const auto& e : doc) {
    if (!e.is_object()) {
      out.rejected.push_back({e, "entry is not an object"});
      continue;
    }
    auto str = [&](const char* key) -> std::optional<std::string> {
      if (!e.contains(key) || !e[key].is_string()) return std::nullopt;
      return e[key].get<std::string>();
    };
    const auto statement = str("statement");
    const auto technique = str("technique");
    const auto explanation = str("explanation");
    if (!statement || !technique || !explanation) {
      out.rejected.push_back({e, "entry lacks a string statement, technique or explanation"});
      continue;
    }
    if (text::trim(text::decode(*statement)).empty() || text::trim(text::decode(*explanation)).empty()) {
      out.rejected.push_back({e, "empty statement or explanation"});
      continue;
    }
    const auto parsed = try_parse_technique(*technique);
    if (!parsed) {
      out.rejected.push_back({e, "unknown technique: " + *technique});
      continue;
    }
    RawDetection r{*statement, to_string(*parsed), *explanation, std::nullopt};
    if (e.contains("locator_hint")) {
      const auto& h = e["locator_hint"];
      if (h.is_number_unsigned()) r.locator_hint = h.get<std::size_t>();
      else if (h.is_string()) r.locator_hint = h.get<std::string>();
    }
    out.detections.push_back(std::move(r));
  }
  return out;
}

/// Inverse of parse_llm_output on its accepted grammar.
inline std::string serialize_llm_output(const std::vector<RawDetection>& detections) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : detections) arr.push_back(to_json(d));
  return arr.dump();
}

/// Phase-1 answer: a JSON array of technique names (objects with a
/// "technique" field are tolerated). Unknown names are dropped; duplicates
/// collapse, first occurrence wins.
inline std::vector<Technique> parse_technique_list(std::string_view raw, std::vector<std::string>* unknown = nullptr) {
  const nlohmann::json doc = detail::parse_array_lenient(raw);
  std::vector<Technique> out;
  for (const auto& e : doc) {
    std::optional<std::string> name;
    if (e.is_string()) name = e.get<std::string>();
    else if (e.is_object() && e.contains("technique") && e["technique"].is_string()) name = e["technique"].get<std::string>();
    if (!name) continue;
    if (const auto t = try_parse_technique(*name)) {
      if (std::find(out.begin(), out.end(), *t) == out.end()) out.push_back(*t);
    } else if (unknown) {
      unknown->push_back(*name);
    }
  }
  return out;
}

// Chunking -------------------------------------------------------------------

struct Chunk {
  std::size_t offset = 0;  // scalar offset of text within the whole body
  std::string text;
};

/// Packs whole paragraphs (separated by blank lines) greedily into chunks of
/// at most `budget` scalars. A single paragraph over budget is BodyTooLarge.
inline std::vector<Chunk> chunk_paragraphs(std::string_view body, std::size_t budget = kDefaultCharBudget) {
  const std::u32string cps = text::decode(body);
  if (cps.size() <= budget) return {Chunk{0, std::string(body)}};

  // Paragraph pieces [starts[i], starts[i+1]); a piece ends after its blank-line run.
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] != U'\n') continue;
    std::size_t j = i + 1;
    while (j < cps.size() && cps[j] != U'\n' && text::is_space(cps[j])) ++j;
    if (j < cps.size() && cps[j] == U'\n') {
      while (j < cps.size() && text::is_space(cps[j])) ++j;
      if (j < cps.size()) starts.push_back(j);
      i = j - 1;
    }
  }
  starts.push_back(cps.size());

  auto content_end = [&](std::size_t b, std::size_t e) {
    while (e > b && text::is_space(cps[e - 1])) --e;
    return e;
  };

  std::vector<Chunk> chunks;
  std::size_t chunk_begin = starts[0];
  std::size_t chunk_end = starts[0];
  auto flush = [&] {
    const std::size_t e = content_end(chunk_begin, chunk_end);
    if (e > chunk_begin) {
      chunks.push_back(Chunk{chunk_begin, text::encode(std::u32string_view(cps).substr(chunk_begin, e - chunk_begin))});
    }
  };
  for (std::size_t p = 0; p + 1 < starts.size(); ++p) {
    const std::size_t pb = starts[p];
    const std::size_t pe = starts[p + 1];
    const std::size_t plen = content_end(pb, pe) - pb;
    if (plen > budget) throw BodyTooLarge(plen, budget);
    if (content_end(chunk_begin, pe) - chunk_begin > budget) {
      flush();
      chunk_begin = pb;
    }
    chunk_end = pe;
  }
  flush();
  return chunks;
}

// Rule provider --------------------------------------------------------------

enum class MatchMode { Word, Phrase };

struct LexiconEntry {
  std::string pattern;  // lowercase
  MatchMode mode = MatchMode::Word;
};

/// Word entries must match whole words; phrase entries match anywhere.
struct Lexicon {
  Technique technique;
  std::vector<LexiconEntry> entries;
  std::string explanation_template;  // "{match}" is replaced by the matched text

  void validate() const {
    if (entries.empty()) throw ConfigError("lexicon for " + to_string(technique) + " has no entries");
    for (const auto& e : entries) {
      if (e.pattern.empty()) throw ConfigError("lexicon for " + to_string(technique) + " has an empty pattern");
      const auto cps = text::decode(e.pattern);
      if (text::fold_case(cps) != cps) {
        throw ConfigError("lexicon pattern '" + e.pattern + "' must be lowercase");
      }
    }
    if (text::trim(text::decode(explanation_template)).empty()) {
      throw ConfigError("lexicon for " + to_string(technique) + " has an empty explanation template");
    }
  }
};

inline std::vector<Lexicon> lexicons_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("lexicon file must be a JSON array");
  std::vector<Lexicon> out;
  for (const auto& e : j) {
    try {
      Lexicon lex{parse_technique(e.at("technique").get<std::string>()), {},
                  e.at("explanation_template").get<std::string>()};
      for (const auto& entry : e.at("entries")) {
        const auto mode = entry.value("mode", std::string("word"));
        MatchMode m;
        if (mode == "word") m = MatchMode::Word;
        else if (mode == "phrase") m = MatchMode::Phrase;
        else throw ConfigError("unknown lexicon match mode '" + mode + "'");
        lex.entries.push_back({entry.at("pattern").get<std::string>(), m});
      }
      lex.validate();
      out.push_back(std::move(lex));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("malformed lexicon: ") + ex.what());
    } catch (const UnknownTechnique& ex) {
      throw ConfigError(std::string("lexicon names ") + ex.what());
    }
  }
  return out;
}

/// Repetition signal: one content word of at least `min_letters` letters
/// occurring `min_occurrences` or more times.
struct RepetitionRule {
  std::size_t min_occurrences = 3;
  std::size_t min_letters = 6;
  std::string explanation_template =
      "The word \"{match}\" appears {count} times in the text; repeating it drives the same idea home "
      "instead of adding new information.";
};

namespace detail {

struct SentenceRange {
  std::size_t begin;
  std::size_t end;
};

/// True when a line break at `k` is followed by another before any non-space.
inline bool paragraph_break_at(std::u32string_view s, std::size_t k) {
  if (s[k] != U'\n') return false;
  for (std::size_t j = k + 1; j < s.size() && text::is_space(s[j]); ++j) {
    if (s[j] == U'\n') return true;
  }
  return false;
}

/// Sentences end at '.', '!' or '?' followed by whitespace (or the end of
/// text), and at paragraph breaks so unpunctuated headlines stand alone.
inline std::vector<SentenceRange> split_sentences(std::u32string_view s) {
  std::vector<SentenceRange> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    if (i >= s.size()) break;
    const std::size_t b = i;
    std::size_t e = s.size();
    for (std::size_t k = i; k < s.size(); ++k) {
      if ((s[k] == U'.' || s[k] == U'!' || s[k] == U'?') && (k + 1 == s.size() || text::is_space(s[k + 1]))) {
        e = k + 1;
        break;
      }
      if (paragraph_break_at(s, k)) {
        e = k;
        break;
      }
    }
    std::size_t te = e;
    while (te > b && text::is_space(s[te - 1])) --te;
    out.push_back({b, te});
    i = e;
  }
  return out;
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Words of six or more letters that carry no content of their own.
inline const std::vector<std::u32string>& repetition_stopwords() {
  static const std::vector<std::u32string> words = [] {
    std::vector<std::u32string> w;
    for (const char* s : {"should", "would", "because", "before", "through", "however", "between", "without",
                          "against", "during", "within", "around", "another", "itself", "himself", "herself",
                          "themselves", "ourselves", "yourself", "whether", "though", "although", "others",
                          "rather", "across", "toward", "towards", "almost", "always", "whatever", "whenever",
                          "wherever", "whoever", "having", "including", "according", "therefore", "further",
                          "become", "becomes", "people", "things", "something", "anything", "everything",
                          "nothing", "someone", "anyone", "everyone", "really", "already", "saying",
                          "thought", "behind", "beyond", "inside", "outside", "either", "neither", "enough",
                          "instead", "unless", "whereas"}) {
      w.push_back(text::decode(s));
    }
    std::sort(w.begin(), w.end());
    return w;
  }();
  return words;
}

}  // namespace detail

/// Deterministic lexicon scan. Each hit becomes a RawDetection whose statement
/// is the sentence containing it; output is ordered by hit position.
inline std::vector<RawDetection> rule_detect(const Article& article, const std::vector<Lexicon>& lexicons,
                                             const std::optional<RepetitionRule>& repetition = RepetitionRule{}) {
  const std::u32string body = text::decode(article.body);
  const std::u32string folded = text::fold_case(body);
  const auto sentences = detail::split_sentences(body);

  struct Hit {
    std::size_t pos;
    std::size_t order;  // lexicon/entry order breaks position ties
    Technique technique;
    std::string explanation;
  };
  std::vector<Hit> hits;
  std::size_t order = 0;

  for (const auto& lex : lexicons) {
    for (const auto& entry : lex.entries) {
      const std::u32string pat = text::decode(entry.pattern);
      for (auto pos = folded.find(pat); pos != std::u32string::npos; pos = folded.find(pat, pos + 1)) {
        const std::size_t end = pos + pat.size();
        if (entry.mode == MatchMode::Word) {
          if (pos > 0 && text::is_word_char(folded[pos - 1])) continue;
          if (end < folded.size() && text::is_word_char(folded[end])) continue;
        }
        std::string expl = lex.explanation_template;
        detail::replace_all(expl, "{match}", text::encode(std::u32string_view(body).substr(pos, pat.size())));
        hits.push_back({pos, order, lex.technique, std::move(expl)});
      }
      ++order;
    }
  }

  if (repetition) {
    std::map<std::u32string, std::vector<std::size_t>> occurrences;
    std::size_t i = 0;
    while (i < folded.size()) {
      if (!text::is_letter(folded[i])) {
        ++i;
        continue;
      }
      const std::size_t b = i;
      while (i < folded.size() && text::is_word_char(folded[i])) ++i;
      const std::u32string word = folded.substr(b, i - b);
      if (word.size() < repetition->min_letters) continue;
      if (!std::all_of(word.begin(), word.end(), [](char32_t c) { return text::is_letter(c); })) continue;
      if (std::binary_search(detail::repetition_stopwords().begin(), detail::repetition_stopwords().end(), word)) {
        continue;
      }
      occurrences[word].push_back(b);
    }
    for (const auto& [word, where] : occurrences) {
      if (where.size() < repetition->min_occurrences) continue;
      std::string expl = repetition->explanation_template;
      detail::replace_all(expl, "{match}", text::encode(word));
      detail::replace_all(expl, "{count}", std::to_string(where.size()));
      hits.push_back({where[repetition->min_occurrences - 1], order, Technique::Repetition, std::move(expl)});
    }
  }

  std::stable_sort(hits.begin(), hits.end(),
                   [](const Hit& a, const Hit& b) { return std::tie(a.pos, a.order) < std::tie(b.pos, b.order); });

  std::vector<RawDetection> out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    const auto it = std::find_if(sentences.begin(), sentences.end(),
                                 [&](const detail::SentenceRange& s) { return h.pos >= s.begin && h.pos < s.end; });
    if (it == sentences.end()) continue;
    out.push_back(RawDetection{text::encode(std::u32string_view(body).substr(it->begin, it->end - it->begin)),
                               to_string(h.technique), h.explanation, LocatorHint{it->begin}});
  }
  return out;
}

// Provider interface ---------------------------------------------------------

struct ProviderCapabilities {
  bool supports_persona = false;
  bool deterministic = false;
  bool supports_model_switching = false;
};

/// Raw detections for one slice of the article, in slice coordinates.
struct ProviderPart {
  std::size_t offset = 0;
  std::string text;
  std::vector<RawDetection> raw;
};

struct ProviderResult {
  std::vector<ProviderPart> parts;
  std::vector<Unanchored> rejected;
  int attempts = 1;
};

class DetectionProvider {
 public:
  virtual ~DetectionProvider() = default;
  virtual std::string id() const = 0;
  virtual ProviderCapabilities capabilities() const = 0;
  /// Model identifier used when the caller does not switch models.
  virtual std::string default_model() const = 0;
  /// `model` is honored only with supports_model_switching; `persona` only with supports_persona.
  virtual ProviderResult detect(const Article& article, const PersonaDirective* persona, const std::string& model) = 0;
};

class RuleProvider final : public DetectionProvider {
 public:
  explicit RuleProvider(std::vector<Lexicon> lexicons, std::optional<RepetitionRule> repetition = RepetitionRule{})
      : lexicons_(std::move(lexicons)), repetition_(std::move(repetition)) {}

  std::string id() const override { return "rule"; }
  ProviderCapabilities capabilities() const override { return {false, true, false}; }
  std::string default_model() const override { return "rule-lexicon"; }

  ProviderResult detect(const Article& article, const PersonaDirective*, const std::string&) override {
    ProviderResult r;
    r.parts.push_back(ProviderPart{0, article.body, rule_detect(article, lexicons_, repetition_)});
    return r;
  }

  const std::vector<Lexicon>& lexicons() const noexcept { return lexicons_; }

 private:
  std::vector<Lexicon> lexicons_;
  std::optional<RepetitionRule> repetition_;
};

}  // namespace apollo
