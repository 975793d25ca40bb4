#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/verdict.h"

namespace cmdforge {

// Feature flags selecting the prompt decorator components. hold_view injects
// an initial stance into the first-round user prompt only.
struct PromptSpec {
  bool step_by_step = false;
  bool task_description = false;
  bool response_format = false;
  bool one_shot = false;
  std::optional<Verdict> hold_view;

  static PromptSpec all_features() { return {true, true, true, true, std::nullopt}; }

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

struct TaskInstance {
  std::string id;
  std::vector<std::string> premises;
  std::string proposition;
  std::optional<Verdict> gold;

  // Throws SpecError when premises or proposition are empty.
  void validate() const;
};

// Parses {id, premises, conclusion|proposition, label?}.
TaskInstance task_from_json(const nlohmann::json& j);

// Text resources shipped with the library, one per decorator component or
// discussion template. Loaded verbatim at build time.
enum class Template {
  Header,
  AnswerSuffix,
  StepByStep,
  TaskDescription,
  AnswerFormat,
  OneShot,
  Question,
  HoldView,
  MidRoundSystem,
  MidRoundUser,
  SecretarySystem,
  SecretaryUser,
};

std::string_view template_text(Template t);
std::string_view template_name(Template t);

// Composition order: header, task description, answer format, answer
// suffix, step-by-step sentence (suppressed when the answer format is on),
// one-shot example. Lines are joined with '\n'; no trailing newline.
std::string render_system_prompt(const PromptSpec& spec);

std::string render_question(const TaskInstance& task);

struct ParsedAnswer {
  Verdict verdict;
  std::string explanation;
};

// Last case-insensitive bracketed verdict token, or nullopt.
std::optional<Verdict> find_verdict(std::string_view response);

// Throws NoVerdictFound when the response carries no bracketed verdict.
ParsedAnswer parse_verdict(std::string_view response);

// Empty when no stance is requested.
std::string hold_view_instruction(std::optional<Verdict> v);

// "One agent thinks the proposition is Correct." /
// "Three agents think the proposition is Incorrect."
std::string count_sentence(std::size_t count, Verdict v);

// Inverse of the spelled-out counts used in count_sentence.
std::optional<std::size_t> parse_count_word(std::string_view word);

struct PeerAnswer {
  std::string agent_id;
  Verdict verdict;
  std::string explanation;
};

// What one agent may see of the previous round: viewpoint counts from other
// groups and full answers from its own group members.
struct OpinionDigest {
  std::size_t group_count = 1;
  Tally other_groups{};
  std::vector<PeerAnswer> own_group;  // ordered by agent id
};

// Mid-round system text for one agent.
std::string render_discussion_prompt(const OpinionDigest& digest);
std::string mid_round_instruction();

struct TiedSide {
  Verdict verdict;
  std::size_t count;
  std::string sample_answer;
};

std::string render_secretary_prompt(const TaskInstance& task, std::size_t voters,
                                    const std::vector<TiedSide>& sides);
std::string secretary_instruction();

}  // namespace cmdforge
