#include "cmdforge/symmetry.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cmdforge/errors.h"

namespace cmdforge {

Permutation::Permutation(std::vector<std::size_t> image) : image_(std::move(image)) {
  std::vector<bool> seen(image_.size(), false);
  for (std::size_t v : image_) {
    if (v >= image_.size() || seen[v]) {
      throw std::invalid_argument("image is not a permutation");
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t m) {
  std::vector<std::size_t> image(m);
  std::iota(image.begin(), image.end(), std::size_t{0});
  return Permutation(std::move(image));
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (image_[i] != i) return false;
  }
  return true;
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(image_.size());
  for (std::size_t i = 0; i < image_.size(); ++i) inv[image_[i]] = i;
  return Permutation(std::move(inv));
}

Permutation Permutation::after(const Permutation& rhs) const {
  if (rhs.size() != size()) throw std::invalid_argument("permutation sizes differ");
  std::vector<std::size_t> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = image_[rhs.image_[i]];
  return Permutation(std::move(out));
}

std::string Permutation::to_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(image_[i] + 1);
  }
  return s + "]";
}

AgentAssignment apply_permutation(const Mechanism& mechanism, const Permutation& pi) {
  const auto& alpha = mechanism.assignment;
  if (pi.size() != alpha.agent_count()) {
    throw std::invalid_argument("permutation length " + std::to_string(pi.size()) +
                                " does not match agent count " +
                                std::to_string(alpha.agent_count()));
  }
  std::vector<std::size_t> permuted(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) permuted[i] = pi(alpha(i));
  return AgentAssignment(std::move(permuted), alpha.agent_count());
}

namespace {

void check_caps(const Mechanism& mechanism, const SymmetryLimits& limits) {
  if (mechanism.graph.inference_count() > limits.max_inference_nodes) {
    throw CapExceeded("mechanism has " + std::to_string(mechanism.graph.inference_count()) +
                      " inference nodes, cap is " + std::to_string(limits.max_inference_nodes));
  }
}

// Backtracking search for phi with color-class pruning. Nodes are assigned in
// index order; each candidate must match color and be consistent in both edge
// directions with every previously assigned node.
class IsomorphismSearch {
 public:
  IsomorphismSearch(const MechanismGraph& g, std::vector<NodeColor> source,
                    std::vector<NodeColor> target)
      : g_(g), source_(std::move(source)), target_(std::move(target)),
        phi_(g.node_count(), kUnset), used_(g.node_count(), false) {}

  std::optional<std::vector<std::size_t>> run() {
    // Input and Output are pinned.
    phi_[g_.input_node()] = g_.input_node();
    phi_[g_.output_node()] = g_.output_node();
    used_[g_.input_node()] = used_[g_.output_node()] = true;
    if (!consistent(g_.input_node()) || !consistent(g_.output_node())) return std::nullopt;
    if (!extend(0)) return std::nullopt;
    return phi_;
  }

 private:
  static constexpr std::size_t kUnset = static_cast<std::size_t>(-1);

  bool consistent(std::size_t v) const {
    const std::size_t w = phi_[v];
    if (g_.has_edge(v, v) != g_.has_edge(w, w)) return false;
    for (std::size_t u = 0; u < g_.node_count(); ++u) {
      if (u == v || phi_[u] == kUnset) continue;
      if (g_.has_edge(u, v) != g_.has_edge(phi_[u], w)) return false;
      if (g_.has_edge(v, u) != g_.has_edge(w, phi_[u])) return false;
    }
    return true;
  }

  bool extend(std::size_t v) {
    while (v < g_.node_count() && phi_[v] != kUnset) ++v;
    if (v == g_.node_count()) return true;
    for (std::size_t w = 0; w < g_.node_count(); ++w) {
      if (used_[w] || !(source_[v] == target_[w])) continue;
      phi_[v] = w;
      used_[w] = true;
      if (consistent(v) && extend(v + 1)) return true;
      phi_[v] = kUnset;
      used_[w] = false;
    }
    return false;
  }

  const MechanismGraph& g_;
  std::vector<NodeColor> source_;
  std::vector<NodeColor> target_;
  std::vector<std::size_t> phi_;
  std::vector<bool> used_;
};

}  // namespace

std::optional<std::vector<std::size_t>> find_isomorphism(const Mechanism& mechanism,
                                                         const Permutation& pi,
                                                         const SymmetryLimits& limits) {
  check_caps(mechanism, limits);
  const auto permuted = apply_permutation(mechanism, pi);
  auto source = color_graph(mechanism.graph, mechanism.assignment, mechanism.roster);
  auto target = color_graph(mechanism.graph, permuted, mechanism.roster);

  // Color multisets must agree before any search is worthwhile.
  auto a = source, b = target;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) return std::nullopt;

  return IsomorphismSearch(mechanism.graph, std::move(source), std::move(target)).run();
}

bool is_mechanism_invariant(const Mechanism& mechanism, const Permutation& pi,
                            const SymmetryLimits& limits) {
  return find_isomorphism(mechanism, pi, limits).has_value();
}

bool is_model_invariant(const AgentRoster& roster, const Permutation& pi) {
  if (pi.size() != roster.size()) {
    throw std::invalid_argument("permutation length does not match roster size");
  }
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (roster[i].model != roster[pi(i)].model) return false;
  }
  return true;
}

bool satisfies_group_axioms(const std::vector<Permutation>& set) {
  if (set.empty()) return false;
  std::set<Permutation> members(set.begin(), set.end());
  if (!members.contains(Permutation::identity(set.front().size()))) return false;
  for (const auto& p : set) {
    if (!members.contains(p.inverse())) return false;
    for (const auto& q : set) {
      if (!members.contains(p.after(q))) return false;
    }
  }
  return true;
}

SymmetryReport symmetry_group(const Mechanism& mechanism, const SymmetryLimits& limits) {
  const std::size_t m = mechanism.roster.size();
  if (m == 0) throw SpecError("mechanism has no agents");
  if (m > limits.max_agents) {
    throw CapExceeded("mechanism has " + std::to_string(m) + " agents, cap is " +
                      std::to_string(limits.max_agents));
  }
  check_caps(mechanism, limits);

  SymmetryReport report;
  for (const auto& a : mechanism.roster.agents()) report.agents.push_back(a.id);

  std::vector<std::size_t> image(m);
  std::iota(image.begin(), image.end(), std::size_t{0});
  do {
    Permutation pi(image);
    if (is_mechanism_invariant(mechanism, pi, limits)) report.mechanism_sym.push_back(pi);
    if (is_model_invariant(mechanism.roster, pi)) report.model_sym.push_back(pi);
  } while (std::next_permutation(image.begin(), image.end()));

  if (!satisfies_group_axioms(report.mechanism_sym)) {
    throw std::logic_error("mechanism symmetry set violates the group axioms");
  }
  if (!satisfies_group_axioms(report.model_sym)) {
    throw std::logic_error("model symmetry set violates the group axioms");
  }
  return report;
}

nlohmann::json to_json(const SymmetryReport& report) {
  auto perms = [](const std::vector<Permutation>& set) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : set) {
      nlohmann::json img = nlohmann::json::array();
      for (std::size_t v : p.image()) img.push_back(v + 1);
      out.push_back(std::move(img));
    }
    return out;
  };
  return {
      {"agents", report.agents},
      {"mechanism_order", report.mechanism_order()},
      {"model_order", report.model_order()},
      {"permutations", perms(report.mechanism_sym)},
      {"model_permutations", perms(report.model_sym)},
  };
}

}  // namespace cmdforge
