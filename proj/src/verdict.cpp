#include "cmdforge/verdict.h"

#include <algorithm>
#include <cctype>

namespace cmdforge {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Correct:   return "Correct";
    case Verdict::Incorrect: return "Incorrect";
    case Verdict::Unknown:   return "Unknown";
  }
  return "Unknown";
}

std::optional<Verdict> verdict_from_string(std::string_view s) {
  for (Verdict v : kAllVerdicts) {
    if (iequals(s, to_string(v))) return v;
  }
  return std::nullopt;
}

std::optional<Verdict> verdict_from_label(std::string_view label) {
  if (label == "True") return Verdict::Correct;
  if (label == "False") return Verdict::Incorrect;
  if (label == "Unknown" || label == "Uncertain") return Verdict::Unknown;
  return std::nullopt;
}

std::string_view to_label(Verdict v) {
  switch (v) {
    case Verdict::Correct:   return "True";
    case Verdict::Incorrect: return "False";
    case Verdict::Unknown:   return "Unknown";
  }
  return "Unknown";
}

}  // namespace cmdforge
