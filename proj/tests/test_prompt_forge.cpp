#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cmdforge/errors.h"
#include "cmdforge/prompt_forge.h"
#include "support/fixtures.h"

using namespace cmdforge;
using fixtures::golden;

namespace {

PromptSpec flags(bool step, bool desc, bool format, bool shot) {
  return PromptSpec{step, desc, format, shot, std::nullopt};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST(SystemPrompt, Vanilla) { EXPECT_EQ(render_system_prompt(flags(0, 0, 0, 0)), golden("vanilla.txt")); }

TEST(SystemPrompt, StepByStep) {
  EXPECT_EQ(render_system_prompt(flags(1, 0, 0, 0)), golden("step_by_step.txt"));
}

TEST(SystemPrompt, AnswerFormat) {
  EXPECT_EQ(render_system_prompt(flags(0, 0, 1, 0)), golden("answer_format.txt"));
}

TEST(SystemPrompt, TaskDescription) {
  EXPECT_EQ(render_system_prompt(flags(0, 1, 0, 0)), golden("task_description.txt"));
}

TEST(SystemPrompt, OneShot) { EXPECT_EQ(render_system_prompt(flags(0, 0, 0, 1)), golden("one_shot.txt")); }

TEST(SystemPrompt, AllFeatures) {
  EXPECT_EQ(render_system_prompt(PromptSpec::all_features()), golden("all_features.txt"));
}

TEST(SystemPrompt, AllCombinationsDeterministicAndDistinct) {
  std::set<std::string> seen;
  const auto vanilla = lines_of(render_system_prompt(flags(0, 0, 0, 0)));
  for (int mask = 0; mask < 16; ++mask) {
    const PromptSpec spec = flags(mask & 1, mask & 2, mask & 4, mask & 8);
    const std::string a = render_system_prompt(spec);
    EXPECT_EQ(a, render_system_prompt(spec));
    seen.insert(a);
    // The vanilla prompt's lines appear, in order, in every composition.
    const auto lines = lines_of(a);
    std::size_t k = 0;
    for (const auto& l : lines) {
      if (k < vanilla.size() && l == vanilla[k]) ++k;
    }
    EXPECT_EQ(k, vanilla.size()) << mask;
  }
  // Step-by-step is subsumed by the answer format, so those pairs coincide.
  EXPECT_EQ(seen.size(), 12u);
}

TEST(Question, MatchesWalkthroughUserBlock) {
  EXPECT_EQ(render_question(fixtures::neocrepidodera_task()), golden("question.txt"));
}

TEST(Question, RejectsEmptyPremises) {
  TaskInstance t = fixtures::neocrepidodera_task();
  t.premises.clear();
  EXPECT_THROW(render_question(t), SpecError);
  t = fixtures::neocrepidodera_task();
  t.proposition.clear();
  EXPECT_THROW(render_question(t), SpecError);
}

TEST(TaskJson, AcceptsConclusionAndLabels) {
  auto t = task_from_json(nlohmann::json::parse(
      R"({"id": 7, "premises": ["a.", "b."], "conclusion": "c.", "label": "False"})"));
  EXPECT_EQ(t.id, "7");
  EXPECT_EQ(t.proposition, "c.");
  EXPECT_EQ(t.gold, Verdict::Incorrect);
  auto s = task_from_json(nlohmann::json::parse(R"({"id": "s", "premises": "a.\nb.\n", "proposition": "c."})"));
  EXPECT_EQ(s.premises.size(), 2u);
  EXPECT_FALSE(s.gold.has_value());
  EXPECT_THROW(task_from_json(nlohmann::json::parse(
                   R"({"id": "x", "premises": ["a."], "conclusion": "c.", "label": "Maybe"})")),
               SpecError);
}

TEST(ParseVerdict, LastBracketedTokenWins) {
  EXPECT_EQ(parse_verdict("so it is [Incorrect]").verdict, Verdict::Incorrect);
  EXPECT_EQ(parse_verdict("[Correct] at first, but finally [unknown].").verdict, Verdict::Unknown);
  EXPECT_EQ(parse_verdict("[Maybe] then [CORRECT] then [done]").verdict, Verdict::Correct);
  EXPECT_EQ(parse_verdict("text [Correct]").explanation, "text [Correct]");
  EXPECT_THROW(parse_verdict("Correct without brackets"), NoVerdictFound);
  EXPECT_THROW(parse_verdict(""), NoVerdictFound);
  EXPECT_FALSE(find_verdict("[Correct").has_value());
}

TEST(ParseVerdict, ReferenceAnswers) {
  // Closing sentences of the single-agent answer and of the secretary's answer.
  EXPECT_EQ(parse_verdict("The proposition \"There are no flea beetles within the Chrysomelidae "
                          "family\" contradicts the given premises, so it is [Incorrect].")
                .verdict,
            Verdict::Incorrect);
  EXPECT_EQ(parse_verdict("Since IBM has an office in Zurich, the proposition \"IBM has an office in "
                          "London or Zurich\" is [Correct].")
                .verdict,
            Verdict::Correct);
}

TEST(CountSentence, WordsAndGrammar) {
  EXPECT_EQ(count_sentence(1, Verdict::Correct), "One agent thinks the proposition is Correct.");
  EXPECT_EQ(count_sentence(3, Verdict::Incorrect), "Three agents think the proposition is Incorrect.");
  EXPECT_EQ(count_sentence(13, Verdict::Unknown), "13 agents think the proposition is Unknown.");
  EXPECT_EQ(parse_count_word("three"), 3u);
  EXPECT_EQ(parse_count_word("Twelve"), 12u);
  EXPECT_EQ(parse_count_word("42"), 42u);
  EXPECT_FALSE(parse_count_word("many").has_value());
}

TEST(DiscussionPrompt, AgentARoundOne) {
  OpinionDigest d;
  d.group_count = 2;
  d.other_groups = {0, 3, 0};
  d.own_group.push_back({"B", Verdict::Correct, golden("mid_round_answer_correct.txt")});
  d.own_group.push_back({"C", Verdict::Incorrect, golden("mid_round_answer_incorrect.txt")});
  EXPECT_EQ(render_discussion_prompt(d), golden("mid_round.txt"));
  EXPECT_EQ(mid_round_instruction(), golden("mid_round_user.txt"));
}

TEST(DiscussionPrompt, GroupsOwnAnswersByVerdict) {
  OpinionDigest d;
  d.group_count = 1;
  d.own_group.push_back({"B", Verdict::Incorrect, "b says [Incorrect]"});
  d.own_group.push_back({"C", Verdict::Correct, "c says [Correct]"});
  d.own_group.push_back({"D", Verdict::Incorrect, "d says [Incorrect]\n\n"});
  const std::string p = render_discussion_prompt(d);
  EXPECT_NE(p.find("There is 1 group of people"), std::string::npos);
  EXPECT_EQ(p.find("Other group members' opinions:"), std::string::npos);
  EXPECT_NE(p.find("Two agents think the proposition is Incorrect. Below are their answers:\n"
                   "b says [Incorrect]\nd says [Incorrect]"),
            std::string::npos);
  EXPECT_LT(p.find("Correct. Below is his answer"), p.find("Incorrect. Below are"));
}

TEST(SecretaryPrompt, IbmTie) {
  const std::vector<TiedSide> sides{{Verdict::Correct, 3, "⋯"}, {Verdict::Unknown, 3, "⋯"}};
  EXPECT_EQ(render_secretary_prompt(fixtures::ibm_task(), 6, sides), golden("secretary.txt"));
  EXPECT_EQ(secretary_instruction(), golden("secretary_user.txt"));
}

TEST(HoldView, Instruction) {
  EXPECT_EQ(hold_view_instruction(std::nullopt), "");
  const auto s = hold_view_instruction(Verdict::Unknown);
  EXPECT_NE(s.find("[Unknown]"), std::string::npos);
  EXPECT_EQ(find_verdict(s), Verdict::Unknown);
}

TEST(Templates, NoUnfilledPlaceholdersAfterRendering) {
  for (int mask = 0; mask < 16; ++mask) {
    const auto s = render_system_prompt(flags(mask & 1, mask & 2, mask & 4, mask & 8));
    EXPECT_EQ(s.find("{{"), std::string::npos);
  }
  EXPECT_EQ(render_question(fixtures::ibm_task()).find("{{"), std::string::npos);
}
