#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdforge/mechanism_graph.h"

namespace cmdforge {

// Bijection on agent indices [0, m). Stored as its image sequence.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> image);

  static Permutation identity(std::size_t m);

  std::size_t size() const { return image_.size(); }
  std::size_t operator()(std::size_t i) const { return image_[i]; }
  const std::vector<std::size_t>& image() const { return image_; }
  bool is_identity() const;

  Permutation inverse() const;

  // (this ∘ rhs)(i) = this(rhs(i))
  Permutation after(const Permutation& rhs) const;

  // One-line notation with 1-based images, e.g. "[2,3,1]".
  std::string to_string() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> image_;
};

struct SymmetryLimits {
  std::size_t max_agents = 6;
  std::size_t max_inference_nodes = 16;
};

// alpha'(i) = pi(alpha(i)); graph and roster are unchanged.
AgentAssignment apply_permutation(const Mechanism& mechanism, const Permutation& pi);

// Colored-graph isomorphism phi between the discussion and its pi-permuted
// variant. phi fixes Input and Output, preserves edges in both directions and
// maps each node to one of identical color. Returns phi as a node-index map.
std::optional<std::vector<std::size_t>> find_isomorphism(const Mechanism& mechanism,
                                                         const Permutation& pi,
                                                         const SymmetryLimits& limits = {});

bool is_mechanism_invariant(const Mechanism& mechanism, const Permutation& pi,
                            const SymmetryLimits& limits = {});

bool is_model_invariant(const AgentRoster& roster, const Permutation& pi);

struct SymmetryReport {
  std::vector<std::string> agents;
  std::vector<Permutation> mechanism_sym;  // lexicographic order
  std::vector<Permutation> model_sym;      // lexicographic order

  std::size_t mechanism_order() const { return mechanism_sym.size(); }
  std::size_t model_order() const { return model_sym.size(); }
};

// Enumerates S_m and filters by both invariances independently. Group axioms
// of each returned set are verified; a violation throws std::logic_error.
SymmetryReport symmetry_group(const Mechanism& mechanism, const SymmetryLimits& limits = {});

// Identity present, closed under composition and inverse.
bool satisfies_group_axioms(const std::vector<Permutation>& set);

nlohmann::json to_json(const SymmetryReport& report);

}  // namespace cmdforge
