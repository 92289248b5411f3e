#pragma once

// Resolves a detector-returned statement to a span of the article body.
//
// Three tiers are tried in order: a literal substring search, a search over
// normalized text (case, whitespace, quote and dash variants folded) with
// offsets mapped back to the original, and a token-window fuzzy match scored
// by character edit distance. Among equally good candidates the one nearest
// the hint wins, otherwise the leftmost.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "apollo/annotation.hpp"
#include "apollo/error.hpp"
#include "apollo/raw_detection.hpp"
#include "apollo/technique.hpp"
#include "apollo/text.hpp"

namespace apollo {

struct NormalizedText {
  std::u32string text;
  /// origin[i] is the original code point index that produced text[i].
  std::vector<std::size_t> origin;
};

inline constexpr char32_t normalize_char(char32_t c) {
  switch (c) {
    case 0x2018: case 0x2019: case 0x201A: case 0x201B: case 0x2032: case 0x02BC:
      return U'\'';
    case 0x201C: case 0x201D: case 0x201E: case 0x201F: case 0x2033: case 0x00AB: case 0x00BB:
      return U'"';
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014: case 0x2015: case 0x2212:
      return U'-';
    default:
      return text::fold_case(c);
  }
}

/// Case-folds, unifies quotes and dashes, collapses whitespace runs to one
/// space and trims. Each output character remembers its source position.
inline NormalizedText normalize_mapped(std::u32string_view in) {
  NormalizedText out;
  out.text.reserve(in.size());
  out.origin.reserve(in.size());
  std::optional<std::size_t> pending_space;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char32_t c = in[i];
    if (text::is_space(c)) {
      if (!pending_space && !out.text.empty()) pending_space = i;
      continue;
    }
    if (pending_space) {
      out.text.push_back(U' ');
      out.origin.push_back(*pending_space);
      pending_space.reset();
    }
    out.text.push_back(normalize_char(c));
    out.origin.push_back(i);
  }
  return out;
}

inline std::u32string normalize(std::u32string_view in) { return normalize_mapped(in).text; }

inline std::string normalize(std::string_view utf8) {
  return text::encode(normalize_mapped(text::decode(utf8)).text);
}

/// Levenshtein distance over code points (unit costs), two-row DP.
inline std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// 1 - distance / max(len); two empty strings are identical.
inline double similarity(std::u32string_view a, std::u32string_view b) {
  const std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 1.0;
  return static_cast<double>(m - edit_distance(a, b)) / static_cast<double>(m);
}

enum class Tier { Exact, Normalized, Fuzzy };

inline std::string to_string(Tier t) {
  switch (t) {
    case Tier::Exact: return "Exact";
    case Tier::Normalized: return "Normalized";
    case Tier::Fuzzy: return "Fuzzy";
  }
  return "?";
}

struct MatchTier {
  Tier tier = Tier::Exact;
  double score = 1.0;
  friend bool operator==(const MatchTier&, const MatchTier&) = default;
};

struct Location {
  Span span;
  MatchTier match;
  friend bool operator==(const Location&, const Location&) = default;
};

struct LocateOptions {
  double fuzzy_threshold = 0.8;
  /// Fuzzy windows hold between (1 - w) and (1 + w) times the statement's token count.
  double window_tolerance = 0.2;
};

/// Inclusive window-size bounds, in tokens, for a statement of `tokens` tokens.
inline std::pair<std::size_t, std::size_t> window_bounds(std::size_t tokens, double tolerance) {
  const double k = static_cast<double>(tokens);
  auto lo = static_cast<std::size_t>(std::floor(k * (1.0 - tolerance) + 1e-9));
  auto hi = static_cast<std::size_t>(std::ceil(k * (1.0 + tolerance) - 1e-9));
  return {std::max<std::size_t>(1, lo), std::max<std::size_t>(1, hi)};
}

/// A decoded, normalized, tokenized article body. Build once, locate many.
class BodyIndex {
 public:
  explicit BodyIndex(std::string_view body_utf8)
      : body_(text::decode(body_utf8)), norm_(normalize_mapped(body_)) {
    if (body_.empty()) throw InvalidArgument("cannot locate statements in an empty body");
    std::size_t i = 0;
    while (i < norm_.text.size()) {
      const std::size_t b = i;
      while (i < norm_.text.size() && norm_.text[i] != U' ') ++i;
      tokens_.push_back({b, i});
      ++i;
    }
  }

  const std::u32string& body() const noexcept { return body_; }
  const NormalizedText& normalized() const noexcept { return norm_; }
  std::size_t length() const noexcept { return body_.size(); }

  /// Original span covered by normalized range [b, e).
  Span original_span(std::size_t b, std::size_t e) const {
    return Span{norm_.origin[b], norm_.origin[e - 1] + 1};
  }

  /// Turns a locator hint into a scalar offset. A snippet hint resolves to the
  /// position just after its first normalized occurrence.
  std::optional<std::size_t> resolve_hint(const std::optional<LocatorHint>& hint) const {
    if (!hint) return std::nullopt;
    if (const auto* off = std::get_if<std::size_t>(&*hint)) return std::min(*off, body_.size());
    const std::u32string snippet = normalize(text::decode(std::get<std::string>(*hint)));
    if (snippet.empty()) return std::nullopt;
    const auto pos = norm_.text.find(snippet);
    if (pos == std::u32string::npos) return std::nullopt;
    return norm_.origin[pos + snippet.size() - 1] + 1;
  }

  std::optional<Location> try_locate(std::string_view statement, std::optional<std::size_t> hint = std::nullopt,
                                     const LocateOptions& opts = {}) const {
    const std::u32string stmt = text::decode(statement);
    if (text::trim(stmt).empty()) return std::nullopt;

    // Exact
    {
      std::optional<Span> best;
      for (auto pos = body_.find(stmt); pos != std::u32string::npos; pos = body_.find(stmt, pos + 1)) {
        const Span s{pos, pos + stmt.size()};
        if (!best || closer(s, *best, hint)) best = s;
      }
      if (best) return Location{*best, MatchTier{Tier::Exact, 1.0}};
    }

    const std::u32string nstmt = normalize(stmt);

    // Normalized
    {
      std::optional<Span> best;
      for (auto pos = norm_.text.find(nstmt); pos != std::u32string::npos; pos = norm_.text.find(nstmt, pos + 1)) {
        const Span s = original_span(pos, pos + nstmt.size());
        if (!best || closer(s, *best, hint)) best = s;
      }
      if (best) return Location{*best, MatchTier{Tier::Normalized, 1.0}};
    }

    // Fuzzy
    const std::size_t k = 1 + static_cast<std::size_t>(std::count(nstmt.begin(), nstmt.end(), U' '));
    const auto [min_w, max_w] = window_bounds(k, opts.window_tolerance);
    const std::size_t slen = nstmt.size();
    struct Candidate {
      Span span;
      std::size_t matched;  // max_len - distance
      std::size_t max_len;
    };
    std::optional<Candidate> best;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      for (std::size_t w = min_w; w <= max_w && i + w <= tokens_.size(); ++w) {
        const std::size_t nb = tokens_[i].begin;
        const std::size_t ne = tokens_[i + w - 1].end;
        const std::size_t wlen = ne - nb;
        const std::size_t m = std::max(wlen, slen);
        const std::size_t diff = wlen > slen ? wlen - slen : slen - wlen;
        // Edit distance is at least the length difference.
        if (static_cast<double>(m - diff) < opts.fuzzy_threshold * static_cast<double>(m) - 1e-9) continue;
        const std::u32string_view window = std::u32string_view(norm_.text).substr(nb, wlen);
        const std::size_t d = edit_distance(window, nstmt);
        const std::size_t matched = m - d;
        if (static_cast<double>(matched) < opts.fuzzy_threshold * static_cast<double>(m) - 1e-9) continue;
        const Candidate c{original_span(nb, ne), matched, m};
        if (!best) {
          best = c;
          continue;
        }
        // Compare similarity exactly: matched/max_len via cross-multiplication.
        const auto lhs = static_cast<std::uint64_t>(c.matched) * best->max_len;
        const auto rhs = static_cast<std::uint64_t>(best->matched) * c.max_len;
        if (lhs > rhs || (lhs == rhs && closer(c.span, best->span, hint))) best = c;
      }
    }
    if (best) {
      const double score = static_cast<double>(best->matched) / static_cast<double>(best->max_len);
      return Location{best->span, MatchTier{Tier::Fuzzy, score}};
    }
    return std::nullopt;
  }

  Location locate(std::string_view statement, std::optional<std::size_t> hint = std::nullopt,
                  const LocateOptions& opts = {}) const {
    if (auto loc = try_locate(statement, hint, opts)) return *loc;
    throw NotFound("statement not found in text: '" + std::string(statement) + "'");
  }

 private:
  struct Token {
    std::size_t begin;
    std::size_t end;
  };

  // Tie rule: nearest start to the hint when given, then leftmost, then shortest.
  static bool closer(const Span& a, const Span& b, std::optional<std::size_t> hint) {
    if (hint) {
      const auto da = a.start > *hint ? a.start - *hint : *hint - a.start;
      const auto db = b.start > *hint ? b.start - *hint : *hint - b.start;
      if (da != db) return da < db;
    }
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  }

  std::u32string body_;
  NormalizedText norm_;
  std::vector<Token> tokens_;
};

inline Location locate(const Statement& statement, std::string_view body, std::optional<std::size_t> hint = std::nullopt,
                       const LocateOptions& opts = {}) {
  return BodyIndex(body).locate(statement.text(), hint, opts);
}

struct Unanchored {
  RawDetection raw;
  std::string reason;
  friend bool operator==(const Unanchored&, const Unanchored&) = default;
};

inline nlohmann::json to_json(const Unanchored& u) {
  auto j = to_json(u.raw);
  j["reason"] = u.reason;
  return j;
}

struct Resolution {
  std::vector<Detection> detections;
  std::vector<Unanchored> unanchored;
};

/// Localizes every raw detection. Unresolvable ones (unknown technique, empty
/// fields, or no matching text) land in `unanchored`; resolved ones are
/// deduplicated on (span, technique), keeping the first, and sorted by span.
inline Resolution resolve_all(const std::vector<RawDetection>& raw, std::string_view body,
                              const Provenance& provenance, const LocateOptions& opts = {}) {
  Resolution out;
  const BodyIndex index(body);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& r : raw) {
    const auto technique = try_parse_technique(r.technique_name);
    if (!technique) {
      out.unanchored.push_back({r, "unknown technique: " + r.technique_name});
      continue;
    }
    if (text::trim(text::decode(r.statement)).empty() || text::trim(text::decode(r.explanation)).empty()) {
      out.unanchored.push_back({r, "empty statement or explanation"});
      continue;
    }
    const auto loc = index.try_locate(r.statement, index.resolve_hint(r.locator_hint), opts);
    if (!loc) {
      out.unanchored.push_back({r, "statement not found in text"});
      continue;
    }
    if (!seen.emplace(loc->span.start, loc->span.end, index_of(*technique)).second) continue;
    out.detections.emplace_back(Statement(r.statement), *technique, r.explanation, loc->span, provenance,
                                index.length());
  }
  std::stable_sort(out.detections.begin(), out.detections.end(), [](const Detection& a, const Detection& b) {
    return std::tuple(a.span().start, a.span().end, index_of(a.technique())) <
           std::tuple(b.span().start, b.span().end, index_of(b.technique()));
  });
  return out;
}

}  // namespace apollo
