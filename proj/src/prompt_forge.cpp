#include "cmdforge/prompt_forge.h"

#include <array>
#include <cctype>
#include <sstream>
#include <utility>

#include "cmdforge/errors.h"

namespace cmdforge {

// Generated from resources/templates at configure time.
std::string_view embedded_template(std::string_view name);

namespace {

constexpr std::array<std::pair<Template, std::string_view>, 12> kTemplateFiles = {{
    {Template::Header, "header"},
    {Template::AnswerSuffix, "answer_suffix"},
    {Template::StepByStep, "step_by_step"},
    {Template::TaskDescription, "task_description"},
    {Template::AnswerFormat, "answer_format"},
    {Template::OneShot, "one_shot"},
    {Template::Question, "question"},
    {Template::HoldView, "hold_view"},
    {Template::MidRoundSystem, "mid_round_system"},
    {Template::MidRoundUser, "mid_round_user"},
    {Template::SecretarySystem, "secretary_system"},
    {Template::SecretaryUser, "secretary_user"},
}};

constexpr std::array<std::string_view, 12> kCountWords = {
    "One", "Two", "Three", "Four", "Five", "Six",
    "Seven", "Eight", "Nine", "Ten", "Eleven", "Twelve"};

std::string substitute(std::string_view tpl,
                       std::initializer_list<std::pair<std::string_view, std::string_view>> vars) {
  std::string out(tpl);
  for (const auto& [key, value] : vars) {
    const std::string token = "{{" + std::string(key) + "}}";
    for (auto pos = out.find(token); pos != std::string::npos;
         pos = out.find(token, pos + value.size())) {
      out.replace(pos, token.size(), value);
    }
  }
  return out;
}

std::string join_premises(const std::vector<std::string>& premises) {
  std::string out;
  for (std::size_t i = 0; i < premises.size(); ++i) {
    if (i) out += ' ';
    out += premises[i];
  }
  return out;
}

std::string_view rstrip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void TaskInstance::validate() const {
  if (premises.empty()) throw SpecError("task '" + id + "' has no premises");
  for (const auto& p : premises) {
    if (p.empty()) throw SpecError("task '" + id + "' has an empty premise");
  }
  if (proposition.empty()) throw SpecError("task '" + id + "' has an empty proposition");
}

TaskInstance task_from_json(const nlohmann::json& j) {
  try {
    TaskInstance t;
    t.id = j.contains("id") ? (j.at("id").is_string() ? j.at("id").get<std::string>()
                                                      : j.at("id").dump())
                            : std::string{};
    const auto& premises = j.at("premises");
    if (premises.is_string()) {
      // One premise per line, as in the original FOLIO release.
      std::string line;
      std::istringstream lines(premises.get<std::string>());
      while (std::getline(lines, line)) {
        auto trimmed = rstrip(line);
        if (!trimmed.empty()) t.premises.emplace_back(trimmed);
      }
    } else {
      t.premises = premises.get<std::vector<std::string>>();
    }
    if (j.contains("conclusion")) {
      t.proposition = j.at("conclusion").get<std::string>();
    } else {
      t.proposition = j.at("proposition").get<std::string>();
    }
    if (j.contains("label") && !j.at("label").is_null()) {
      auto label = j.at("label").get<std::string>();
      t.gold = verdict_from_label(label);
      if (!t.gold) throw SpecError("unknown label '" + label + "'");
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed task: ") + e.what());
  }
}

std::string_view template_name(Template t) {
  for (const auto& [id, name] : kTemplateFiles) {
    if (id == t) return name;
  }
  return {};
}

std::string_view template_text(Template t) { return embedded_template(template_name(t)); }

std::string render_system_prompt(const PromptSpec& spec) {
  std::string out(template_text(Template::Header));
  auto add = [&out](Template t) {
    out += '\n';
    out += template_text(t);
  };
  if (spec.task_description) add(Template::TaskDescription);
  if (spec.response_format) add(Template::AnswerFormat);
  add(Template::AnswerSuffix);
  if (spec.step_by_step && !spec.response_format) add(Template::StepByStep);
  if (spec.one_shot) add(Template::OneShot);
  return out;
}

std::string render_question(const TaskInstance& task) {
  task.validate();
  return substitute(template_text(Template::Question),
                    {{"premises", join_premises(task.premises)}, {"proposition", task.proposition}});
}

std::optional<Verdict> find_verdict(std::string_view response) {
  std::optional<Verdict> last;
  for (std::size_t open = response.find('['); open != std::string_view::npos;
       open = response.find('[', open + 1)) {
    auto close = response.find(']', open + 1);
    if (close == std::string_view::npos) break;
    if (auto v = verdict_from_string(response.substr(open + 1, close - open - 1))) last = v;
  }
  return last;
}

ParsedAnswer parse_verdict(std::string_view response) {
  auto v = find_verdict(response);
  if (!v) throw NoVerdictFound("response carries no [Correct]/[Incorrect]/[Unknown] token");
  return {*v, std::string(response)};
}

std::string hold_view_instruction(std::optional<Verdict> v) {
  if (!v) return {};
  return substitute(template_text(Template::HoldView), {{"verdict", to_string(*v)}});
}

std::string count_sentence(std::size_t count, Verdict v) {
  std::string number = count >= 1 && count <= kCountWords.size()
                           ? std::string(kCountWords[count - 1])
                           : std::to_string(count);
  if (count == 1) {
    return number + " agent thinks the proposition is " + std::string(to_string(v)) + ".";
  }
  return number + " agents think the proposition is " + std::string(to_string(v)) + ".";
}

std::optional<std::size_t> parse_count_word(std::string_view word) {
  for (std::size_t i = 0; i < kCountWords.size(); ++i) {
    const auto& w = kCountWords[i];
    if (w.size() != word.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < w.size() && same; ++k) {
      same = std::tolower(static_cast<unsigned char>(w[k])) ==
             std::tolower(static_cast<unsigned char>(word[k]));
    }
    if (same) return i + 1;
  }
  if (word.empty()) return std::nullopt;
  std::size_t value = 0;
  for (char c : word) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

std::string render_discussion_prompt(const OpinionDigest& digest) {
  const std::string groups = digest.group_count == 1
                                 ? std::string("is 1 group")
                                 : "are " + std::to_string(digest.group_count) + " groups";
  std::string out = substitute(template_text(Template::MidRoundSystem), {{"groups", groups}});

  std::size_t others = 0;
  for (auto c : digest.other_groups) others += c;
  if (others > 0) {
    out += "\nOther group members' opinions:";
    for (Verdict v : kAllVerdicts) {
      if (auto c = digest.other_groups[index_of(v)]; c > 0) out += "\n" + count_sentence(c, v);
    }
  }

  if (!digest.own_group.empty()) {
    out += "\nYour group's opinions:";
    for (Verdict v : kAllVerdicts) {
      std::vector<const PeerAnswer*> holders;
      for (const auto& a : digest.own_group) {
        if (a.verdict == v) holders.push_back(&a);
      }
      if (holders.empty()) continue;
      out += "\n" + count_sentence(holders.size(), v);
      out += holders.size() == 1 ? " Below is his answer:" : " Below are their answers:";
      for (const auto* a : holders) {
        out += '\n';
        out += rstrip(a->explanation);
      }
    }
  }
  return out;
}

std::string mid_round_instruction() { return std::string(template_text(Template::MidRoundUser)); }

std::string render_secretary_prompt(const TaskInstance& task, std::size_t voters,
                                    const std::vector<TiedSide>& sides) {
  std::string out = substitute(template_text(Template::SecretarySystem),
                               {{"voters", std::to_string(voters)},
                                {"premises", join_premises(task.premises)},
                                {"proposition", task.proposition}});
  for (const auto& side : sides) {
    out += "\n" + count_sentence(side.count, side.verdict);
    out += side.count == 1 ? " Below is the answer:" : " Below is one of their answers:";
    out += '\n';
    out += rstrip(side.sample_answer);
  }
  return out;
}

std::string secretary_instruction() { return std::string(template_text(Template::SecretaryUser)); }

}  // namespace cmdforge
