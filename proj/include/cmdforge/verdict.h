#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace cmdforge {

enum class Verdict { Correct = 0, Incorrect = 1, Unknown = 2 };

inline constexpr std::array<Verdict, 3> kAllVerdicts = {
    Verdict::Correct, Verdict::Incorrect, Verdict::Unknown};

// Per-verdict counts indexed by static_cast<size_t>(Verdict).
using Tally = std::array<std::size_t, 3>;

inline std::size_t index_of(Verdict v) { return static_cast<std::size_t>(v); }

std::string_view to_string(Verdict v);

// Case-insensitive "correct" / "incorrect" / "unknown".
std::optional<Verdict> verdict_from_string(std::string_view s);

// Dataset labels: True -> Correct, False -> Incorrect, Unknown -> Unknown.
std::optional<Verdict> verdict_from_label(std::string_view label);
std::string_view to_label(Verdict v);

}  // namespace cmdforge
