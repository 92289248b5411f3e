#pragma once

// Brute-force reference for the localizer. Deliberately naive: it works on
// the original body, re-normalizes every candidate substring, and scores
// fuzzy windows with a full Levenshtein matrix. Shares only the code point
// primitives (decode, case folding, whitespace test) with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apollo/text.hpp"

namespace oracle {

enum class Tier { Exact, Normalized, Fuzzy };

struct Result {
  std::size_t start;
  std::size_t end;
  Tier tier;
  std::size_t matched;  // max_len - distance, fuzzy only
  std::size_t max_len;
};

inline char32_t fold(char32_t c) {
  static const std::u32string singles = U"‘’‚‛′ʼ";
  static const std::u32string doubles = U"“”„‟″«»";
  static const std::u32string dashes = U"‐‑‒–—―−";
  if (singles.find(c) != std::u32string::npos) return U'\'';
  if (doubles.find(c) != std::u32string::npos) return U'"';
  if (dashes.find(c) != std::u32string::npos) return U'-';
  return apollo::text::fold_case(c);
}

inline std::u32string norm(std::u32string_view s) {
  std::vector<std::u32string> words;
  std::u32string cur;
  for (char32_t c : s) {
    if (apollo::text::is_space(c)) {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(fold(c));
    }
  }
  if (!cur.empty()) words.push_back(cur);
  std::u32string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(U' ');
    out += words[i];
  }
  return out;
}

inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      if (d[i - 1][j] + 1 < best) best = d[i - 1][j] + 1;
      if (d[i][j - 1] + 1 < best) best = d[i][j - 1] + 1;
      d[i][j] = best;
    }
  }
  return d[a.size()][b.size()];
}

inline std::size_t dist(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// True when (s, e) beats (bs, be) under hint-nearest, leftmost, shortest.
inline bool better_position(std::size_t s, std::size_t e, std::size_t bs, std::size_t be,
                            std::optional<std::size_t> hint) {
  if (hint && dist(s, *hint) != dist(bs, *hint)) return dist(s, *hint) < dist(bs, *hint);
  if (s != bs) return s < bs;
  return e < be;
}

inline std::optional<Result> locate(std::string_view body_utf8, std::string_view statement_utf8,
                                    std::optional<std::size_t> hint, double threshold = 0.8,
                                    double tolerance = 0.2) {
  const std::u32string body = apollo::text::decode(body_utf8);
  const std::u32string stmt = apollo::text::decode(statement_utf8);
  const std::u32string nstmt = norm(stmt);
  if (nstmt.empty()) return std::nullopt;

  std::optional<Result> best;
  for (std::size_t s = 0; s + stmt.size() <= body.size(); ++s) {
    if (body.compare(s, stmt.size(), stmt) != 0) continue;
    if (!best || better_position(s, s + stmt.size(), best->start, best->end, hint)) {
      best = Result{s, s + stmt.size(), Tier::Exact, 0, 0};
    }
  }
  if (best) return best;

  for (std::size_t s = 0; s < body.size(); ++s) {
    if (apollo::text::is_space(body[s])) continue;
    for (std::size_t e = s + 1; e <= body.size(); ++e) {
      if (apollo::text::is_space(body[e - 1])) continue;
      if (norm(std::u32string_view(body).substr(s, e - s)) != nstmt) continue;
      if (!best || better_position(s, e, best->start, best->end, hint)) {
        best = Result{s, e, Tier::Normalized, 0, 0};
      }
    }
  }
  if (best) return best;

  struct Tok {
    std::size_t b, e;
  };
  std::vector<Tok> toks;
  for (std::size_t i = 0; i < body.size();) {
    while (i < body.size() && apollo::text::is_space(body[i])) ++i;
    if (i == body.size()) break;
    const std::size_t b = i;
    while (i < body.size() && !apollo::text::is_space(body[i])) ++i;
    toks.push_back({b, i});
  }
  std::size_t k = 1;
  for (char32_t c : nstmt) k += c == U' ';
  // Window sizes: every w with (1 - tol) k <= w <= (1 + tol) k, rounded outward.
  for (std::size_t i = 0; i < toks.size(); ++i) {
    for (std::size_t w = 1; i + w <= toks.size(); ++w) {
      const double lo = static_cast<double>(k) * (1.0 - tolerance);
      const double hi = static_cast<double>(k) * (1.0 + tolerance);
      if (static_cast<double>(w) < std::floor(lo + 1e-9) || static_cast<double>(w) > std::ceil(hi - 1e-9)) continue;
      const std::u32string window = norm(std::u32string_view(body).substr(toks[i].b, toks[i + w - 1].e - toks[i].b));
      const std::size_t m = std::max(window.size(), nstmt.size());
      const std::size_t matched = m - levenshtein(window, nstmt);
      if (static_cast<double>(matched) < threshold * static_cast<double>(m) - 1e-9) continue;
      const Result r{toks[i].b, toks[i + w - 1].e, Tier::Fuzzy, matched, m};
      if (!best) {
        best = r;
        continue;
      }
      const auto lhs = r.matched * best->max_len;
      const auto rhs = best->matched * r.max_len;
      if (lhs > rhs || (lhs == rhs && better_position(r.start, r.end, best->start, best->end, hint))) best = r;
    }
  }
  return best;
}

}  // namespace oracle
