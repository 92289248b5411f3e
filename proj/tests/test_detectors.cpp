#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "apollo/detectors.hpp"
#include "apollo/localizer.hpp"
#include "support.hpp"

using namespace apollo;

namespace {

const std::string kAuthRight = "Explain as if you were a model that has more authoritarian right-wing views.";

std::vector<Lexicon> shipped_lexicons() {
  return lexicons_from_json(nlohmann::json::parse(testing_support::slurp(testing_support::data_dir() / "lexicons.json")));
}

std::string two_detections() {
  return R"([{"statement":"a catastrophic failure","technique":"Loaded Language","explanation":"emotive"},)"
         R"({"statement":"traitors","technique":"Name_Calling","explanation":"labels critics"}])";
}

}  // namespace

TEST(Prompt, PersonaSentenceOnlyWhenGiven) {
  const Article a("id", "X marks the spot.");
  const PromptDocument plain = build_detection_prompt(a);
  EXPECT_EQ(plain.system.find("Explain as if"), std::string::npos);
  EXPECT_EQ(plain.system.find("centrist"), std::string::npos);
  EXPECT_NE(plain.user.find("X marks the spot."), std::string::npos);

  const auto persona = build_persona_directive({5, 5});
  const PromptDocument steered = build_detection_prompt(a, &persona);
  EXPECT_EQ(steered.system.rfind(kAuthRight, 0), 0u);
  EXPECT_NE(steered.system.find(plain.system), std::string::npos);
  EXPECT_EQ(steered.user, plain.user);
}

TEST(Prompt, BodyEmbeddedVerbatimAndBudget) {
  const std::string body = "Line one.\n\n  “Quoted” — line two.";
  const Article a("id", body, "Headline");
  const auto p = build_identification_prompt(a);
  EXPECT_NE(p.user.find(body), std::string::npos);
  EXPECT_NE(p.user.find("Headline"), std::string::npos);
  for (const auto& t : kTaxonomy) EXPECT_NE(p.system.find(t.canonical), std::string::npos);
  EXPECT_THROW(build_detection_prompt(Article("id", std::string(20, 'x')), nullptr, 10), BodyTooLarge);
  const std::string req = build_explanation_request({Technique::Doubt, Technique::Slogans});
  EXPECT_NE(req.find("Doubt, Slogans"), std::string::npos);
}

TEST(ParseOutput, ValidArray) {
  const auto out = parse_llm_output(two_detections());
  ASSERT_EQ(out.detections.size(), 2u);
  EXPECT_EQ(out.detections[0].technique_name, "Loaded_Language");
  EXPECT_EQ(out.detections[1].statement, "traitors");
  EXPECT_TRUE(out.rejected.empty());
}

TEST(ParseOutput, RepairPassStripsFencesAndPreamble) {
  const auto out = parse_llm_output("Here is the result:\n```json\n" + two_detections() + "\n```\n");
  EXPECT_EQ(out.detections.size(), 2u);
  EXPECT_EQ(out.detections, parse_llm_output(two_detections()).detections);
}

TEST(ParseOutput, NoArrayIsMalformed) {
  EXPECT_THROW(parse_llm_output("I cannot help with that."), MalformedOutput);
  EXPECT_THROW(parse_llm_output(R"({"statement":"x"})"), MalformedOutput);
  EXPECT_THROW(parse_llm_output("[{\"statement\": oops]"), MalformedOutput);
}

TEST(ParseOutput, RejectsBadEntriesWithReasons) {
  const auto out = parse_llm_output(
      R"([{"statement":"x","technique":"Sarcasm","explanation":"e"}, 3,)"
      R"( {"statement":"x","technique":"Doubt"}, {"statement":" ","technique":"Doubt","explanation":"e"},)"
      R"( {"statement":"y","technique":"doubt","explanation":"e","locator_hint":12}])");
  ASSERT_EQ(out.detections.size(), 1u);
  EXPECT_EQ(out.detections[0].technique_name, "Doubt");
  EXPECT_EQ(out.detections[0].locator_hint, LocatorHint{std::size_t{12}});
  ASSERT_EQ(out.rejected.size(), 4u);
  EXPECT_NE(out.rejected[0].reason.find("Sarcasm"), std::string::npos);
}

TEST(ParseOutput, SerializeRoundTripProperty) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> statements{"plain", "with \"quotes\"", "don’t — stop", "new\nline", "ünïcode"};
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<RawDetection> doc;
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      RawDetection r{statements[rng() % statements.size()] + std::to_string(i),
                     std::string(kTaxonomy[rng() % kTaxonomy.size()].canonical), "because " + std::to_string(rng() % 100),
                     std::nullopt};
      if (rng() % 3 == 0) r.locator_hint = LocatorHint{static_cast<std::size_t>(rng() % 500)};
      if (rng() % 5 == 0) r.locator_hint = LocatorHint{std::string("snippet")};
      doc.push_back(r);
    }
    const auto parsed = parse_llm_output(serialize_llm_output(doc));
    EXPECT_EQ(parsed.detections, doc);
    EXPECT_EQ(parse_llm_output(serialize_llm_output(parsed.detections)).detections, parsed.detections);
  }
}

TEST(ParseTechniqueList, StringsObjectsAndUnknowns) {
  std::vector<std::string> unknown;
  const auto ts = parse_technique_list(R"(["Doubt", {"technique":"slogans"}, "Doubt", "Sarcasm"])", &unknown);
  EXPECT_EQ(ts, (std::vector<Technique>{Technique::Doubt, Technique::Slogans}));
  EXPECT_EQ(unknown, std::vector<std::string>{"Sarcasm"});
  EXPECT_TRUE(parse_technique_list("[]").empty());
  EXPECT_THROW(parse_technique_list("none"), MalformedOutput);
}

TEST(RuleDetect, CatastrophicSentence) {
  const Lexicon lex{Technique::Loaded_Language, {{"catastrophic", MatchMode::Word}}, "\"{match}\" is loaded."};
  const auto out = rule_detect(Article("a", "This is a catastrophic failure."), {lex});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].technique_name, "Loaded_Language");
  EXPECT_EQ(out[0].statement, "This is a catastrophic failure.");
  EXPECT_EQ(out[0].explanation, "\"catastrophic\" is loaded.");
}

TEST(RuleDetect, ShippedLexiconOnExample) {
  const auto out = rule_detect(Article("a", "This is a catastrophic failure."), shipped_lexicons());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].technique_name, "Loaded_Language");
  EXPECT_EQ(out[0].statement, "This is a catastrophic failure.");
}

TEST(RuleDetect, HeadlineEndsAtParagraphBreak) {
  const Lexicon lex{Technique::Loaded_Language, {{"catastrophic", MatchMode::Word}}, "{match}"};
  const auto out = rule_detect(Article("a", "A Catastrophic Week\n\nNothing else happened."), {lex});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].statement, "A Catastrophic Week");
  const auto wrapped = rule_detect(Article("a", "It was a\ncatastrophic week."), {lex});
  ASSERT_EQ(wrapped.size(), 1u);
  EXPECT_EQ(wrapped[0].statement, "It was a\ncatastrophic week.");
}

TEST(RuleDetect, NoHitsAndWordBoundaries) {
  EXPECT_TRUE(rule_detect(Article("a", "The committee met on Tuesday."), shipped_lexicons()).empty());
  const Lexicon lex{Technique::Name_Calling, {{"rat", MatchMode::Word}, {"ill will", MatchMode::Phrase}}, "{match}"};
  EXPECT_TRUE(rule_detect(Article("a", "Pirates ate."), {lex}).empty());
  EXPECT_EQ(rule_detect(Article("a", "A RAT! Pure ill willpower."), {lex}).size(), 2u);
}

TEST(RuleDetect, RepetitionNeedsThreeLongWords) {
  const std::string body = "Freedom matters. We want freedom now. Freedom is ours. Cats cats cats.";
  const auto out = rule_detect(Article("a", body), {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].technique_name, "Repetition");
  EXPECT_EQ(out[0].statement, "Freedom is ours.");
  EXPECT_NE(out[0].explanation.find("3 times"), std::string::npos);
  EXPECT_TRUE(rule_detect(Article("a", body), {}, std::nullopt).empty());
}

TEST(RuleDetect, OrderedByPositionAndDeterministic) {
  const std::string body = testing_support::slurp(testing_support::test_data_dir() / "article.txt");
  const auto lex = shipped_lexicons();
  const auto a = rule_detect(Article("a", body), lex);
  const auto b = rule_detect(Article("a", body), lex);
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(serialize_llm_output(a), serialize_llm_output(b));
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_LE(std::get<std::size_t>(*a[i - 1].locator_hint), std::get<std::size_t>(*a[i].locator_hint));
  }
}

TEST(RuleDetect, EveryStatementResolvesExactly) {
  std::mt19937_64 rng(5);
  const auto lex = shipped_lexicons();
  std::vector<std::string> words;
  for (const auto& l : lex) {
    for (const auto& e : l.entries) words.push_back(e.pattern);
  }
  for (const char* w : {"the", "Minister", "said", "today", "budget", "budget", "“quote”", "again", "reform"}) {
    words.push_back(w);
  }
  for (int iter = 0; iter < 100; ++iter) {
    std::string body;
    const int n = 10 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      if (i) body += rng() % 7 == 0 ? ". " : (rng() % 11 == 0 ? "!\n" : " ");
      body += words[rng() % words.size()];
    }
    body += ".";
    const BodyIndex idx(body);
    for (const auto& r : rule_detect(Article("a", body), lex)) {
      EXPECT_TRUE(try_parse_technique(r.technique_name));
      const auto loc = idx.try_locate(r.statement, idx.resolve_hint(r.locator_hint));
      ASSERT_TRUE(loc) << r.statement;
      EXPECT_EQ(loc->match.tier, Tier::Exact);
      EXPECT_EQ(loc->span.start, std::get<std::size_t>(*r.locator_hint));
    }
  }
}

TEST(Lexicons, ShippedFileIsValid) {
  const auto lex = shipped_lexicons();
  std::set<Technique> covered;
  for (const auto& l : lex) covered.insert(l.technique);
  EXPECT_TRUE(covered.count(Technique::Loaded_Language));
  EXPECT_TRUE(covered.count(Technique::Name_Calling));
  EXPECT_TRUE(covered.count(Technique::Exaggeration_Minimisation));
  EXPECT_TRUE(covered.count(Technique::Slogans));
  EXPECT_THROW(lexicons_from_json(nlohmann::json::parse(
                   R"([{"technique":"Doubt","entries":[{"pattern":"Upper","mode":"word"}],"explanation_template":"x"}])")),
               ConfigError);
  EXPECT_THROW(lexicons_from_json(nlohmann::json::parse(
                   R"([{"technique":"Nope","entries":[{"pattern":"a"}],"explanation_template":"x"}])")),
               ConfigError);
}

TEST(Chunking, ParagraphBoundariesAndOffsets) {
  const std::string body = "First para here.\n\nSecond para here.\n\n\nThird “para” here.";
  EXPECT_EQ(chunk_paragraphs(body, 1000).size(), 1u);
  const auto chunks = chunk_paragraphs(body, 20);
  ASSERT_EQ(chunks.size(), 3u);
  for (const auto& c : chunks) {
    EXPECT_EQ(text::substr(body, c.offset, c.offset + text::length(c.text)), c.text);
    EXPECT_LE(text::length(c.text), 20u);
  }
  EXPECT_EQ(chunks[2].text, "Third “para” here.");
  const auto packed = chunk_paragraphs(body, 40);
  ASSERT_EQ(packed.size(), 2u);
  EXPECT_EQ(packed[0].text, "First para here.\n\nSecond para here.");
  EXPECT_THROW(chunk_paragraphs(body, 10), BodyTooLarge);
}
