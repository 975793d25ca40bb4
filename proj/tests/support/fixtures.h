#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cmdforge/cmd_protocol.h"
#include "cmdforge/scripted.h"

namespace fixtures {

std::string read_file(const std::filesystem::path& path);

// Golden file contents with newlines normalized and one trailing newline
// removed, matching how rendered prompts end.
std::string golden(const std::string& name);

cmdforge::TaskInstance neocrepidodera_task();
cmdforge::TaskInstance ibm_task();

cmdforge::AgentFactory scripted_agents(cmdforge::ScriptedPolicy policy, std::size_t budget = 1000000);

// Initial verdicts keyed by agent name ("A", "B", ...).
cmdforge::InitialVerdict initial_from(const std::vector<cmdforge::Verdict>& verdicts);

// flip_to_majority for the listed agents; the secretary answers `secretary`.
cmdforge::ScriptedPolicy flip_policy(const std::vector<cmdforge::Verdict>& initial,
                                     cmdforge::Verdict secretary = cmdforge::Verdict::Correct);

// Fresh temporary directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// True when any message newly sent with the call contains text.
bool mentions(const cmdforge::CallRecord& call, const std::string& text);

struct VisibilityReport {
  std::size_t leaks = 0;    // out-of-group explanations found in a prompt
  std::size_t missing = 0;  // in-group explanations absent from a prompt
  std::size_t checked = 0;
};

// Rebuilds the CMD group structure from the transcript alone (base groups of
// three, then the recorded representatives) and checks every discussion
// prompt against the previous round's answers.
VisibilityReport check_visibility(const cmdforge::Transcript& t, std::size_t n, std::size_t rounds);

}  // namespace fixtures
