#pragma once

// The annotation data model: a detection is a statement, the technique it
// exhibits, an explanation, and where the statement sits in the article.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "apollo/error.hpp"
#include "apollo/technique.hpp"
#include "apollo/text.hpp"

namespace apollo {

using json = nlohmann::json;

class Statement {
 public:
  explicit Statement(std::string text) : text_(std::move(text)) {
    if (text::trim(text::decode(text_)).empty()) {
      throw InvalidArgument("statement must not be empty");
    }
  }
  const std::string& text() const noexcept { return text_; }
  friend bool operator==(const Statement&, const Statement&) = default;

 private:
  std::string text_;
};

/// Half-open [start, end) range counted in unicode scalar values.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool valid_for(std::size_t body_length) const noexcept {
    return start < end && end <= body_length;
  }
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Provenance {
  std::string provider;
  std::string persona;
  /// Requests spent on the phase that needed the most; 1 for single-shot providers.
  int attempts = 1;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

class Detection {
 public:
  /// Validates the span against the scalar length of the body it was resolved in.
  Detection(Statement statement, Technique technique, std::string explanation, Span span,
            Provenance provenance, std::size_t body_length)
      : statement_(std::move(statement)),
        technique_(technique),
        explanation_(std::move(explanation)),
        span_(span),
        provenance_(std::move(provenance)) {
    if (text::trim(text::decode(explanation_)).empty()) {
      throw InvalidArgument("detection explanation must not be empty");
    }
    if (!span_.valid_for(body_length)) {
      throw InvalidArgument("span [" + std::to_string(span_.start) + ", " + std::to_string(span_.end) +
                            ") is outside a body of length " + std::to_string(body_length));
    }
  }

  const Statement& statement() const noexcept { return statement_; }
  Technique technique() const noexcept { return technique_; }
  const std::string& explanation() const noexcept { return explanation_; }
  const Span& span() const noexcept { return span_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  Detection shifted(std::size_t offset, std::size_t body_length) const {
    return Detection(statement_, technique_, explanation_,
                     Span{span_.start + offset, span_.end + offset}, provenance_, body_length);
  }

  friend bool operator==(const Detection&, const Detection&) = default;

 private:
  Statement statement_;
  Technique technique_;
  std::string explanation_;
  Span span_;
  Provenance provenance_;
};

struct Article {
  std::string id;
  std::optional<std::string> title;
  std::string body;
  std::optional<std::string> source_url;

  Article(std::string id_, std::string body_, std::optional<std::string> title_ = std::nullopt,
          std::optional<std::string> url = std::nullopt)
      : id(std::move(id_)), title(std::move(title_)), body(std::move(body_)), source_url(std::move(url)) {
    if (text::trim(text::decode(body)).empty()) throw InvalidArgument("article body must not be empty");
  }
};

// JSON ---------------------------------------------------------------------

inline json to_json(const Span& s) { return json{{"start", s.start}, {"end", s.end}}; }

inline json to_json(const Provenance& p) {
  return json{{"provider", p.provider}, {"persona", p.persona}, {"attempts", p.attempts}};
}

inline json to_json(const Detection& d) {
  return json{{"statement", d.statement().text()},
              {"technique", to_string(d.technique())},
              {"explanation", d.explanation()},
              {"span", to_json(d.span())},
              {"provenance", to_json(d.provenance())}};
}

/// Reads a detection back; `body_length` bounds the span as in construction.
inline Detection detection_from_json(const json& j, std::size_t body_length) {
  try {
    const auto& span = j.at("span");
    const auto& prov = j.at("provenance");
    return Detection(Statement(j.at("statement").get<std::string>()),
                     parse_technique(j.at("technique").get<std::string>()),
                     j.at("explanation").get<std::string>(),
                     Span{span.at("start").get<std::size_t>(), span.at("end").get<std::size_t>()},
                     Provenance{prov.at("provider").get<std::string>(), prov.at("persona").get<std::string>(),
                                prov.value("attempts", 1)},
                     body_length);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed detection document: ") + e.what());
  }
}

}  // namespace apollo
