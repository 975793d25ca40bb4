#include "cmdforge/mechanism_graph.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cmdforge/digest.h"
#include "cmdforge/errors.h"

namespace cmdforge {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Input:     return "input";
    case NodeKind::Output:    return "output";
    case NodeKind::Inference: return "inference";
  }
  return "inference";
}

PromptId prompt_digest(std::string_view decorator_text) {
  return sha256_hex(canonicalize_text(decorator_text));
}

namespace {

std::vector<bool> reach(std::size_t start, std::size_t n,
                        const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

MechanismGraph::MechanismGraph(std::vector<GraphNode> nodes,
                               std::vector<std::pair<std::size_t, std::size_t>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.size();
  std::unordered_set<std::string> ids;
  std::size_t inputs = 0, outputs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ids.insert(nodes_[i].id).second) {
      throw SpecError("duplicate node id '" + nodes_[i].id + "'");
    }
    switch (nodes_[i].kind) {
      case NodeKind::Input:
        ++inputs;
        input_ = i;
        break;
      case NodeKind::Output:
        ++outputs;
        output_ = i;
        break;
      case NodeKind::Inference:
        if (nodes_[i].prompt_id.empty()) nodes_[i].prompt_id = prompt_digest(nodes_[i].prompt);
        inference_.push_back(i);
        break;
    }
  }
  if (inputs != 1) throw SpecError("expected exactly one input node, found " + std::to_string(inputs));
  if (outputs != 1) throw SpecError("expected exactly one output node, found " + std::to_string(outputs));

  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  adjacency_.assign(n * n, 0);
  std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
  for (auto [from, to] : edges_) {
    if (from >= n || to >= n) throw SpecError("edge references a missing node");
    if (to == input_) throw SpecError("edge into input node '" + nodes_[input_].id + "'");
    if (from == output_) throw SpecError("edge out of output node '" + nodes_[output_].id + "'");
    adjacency_[from * n + to] = 1;
    fwd[from].push_back(to);
    bwd[to].push_back(from);
  }

  auto from_input = reach(input_, n, fwd);
  auto to_output = reach(output_, n, bwd);
  for (std::size_t i : inference_) {
    if (!from_input[i]) throw SpecError("inference node '" + nodes_[i].id + "' is unreachable from input");
    if (!to_output[i]) throw SpecError("inference node '" + nodes_[i].id + "' does not reach output");
  }
}

std::size_t MechanismGraph::index_of(std::string_view node_id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == node_id) return i;
  }
  throw SpecError("unknown node id '" + std::string(node_id) + "'");
}

AgentRoster::AgentRoster(std::vector<AgentEntry> agents) : agents_(std::move(agents)) {
  std::unordered_set<std::string> ids;
  for (const auto& a : agents_) {
    if (a.id.empty()) throw SpecError("agent id must be non-empty");
    if (!ids.insert(a.id).second) throw SpecError("duplicate agent id '" + a.id + "'");
  }
}

std::size_t AgentRoster::index_of(std::string_view agent_id) const {
  for (std::size_t j = 0; j < agents_.size(); ++j) {
    if (agents_[j].id == agent_id) return j;
  }
  throw SpecError("unknown agent id '" + std::string(agent_id) + "'");
}

AgentAssignment::AgentAssignment(std::vector<std::size_t> agent_of, std::size_t agent_count)
    : agent_of_(std::move(agent_of)), agent_count_(agent_count) {
  for (std::size_t a : agent_of_) {
    if (a >= agent_count_) throw SpecError("assignment maps outside the agent set");
  }
}

namespace {

NodeKind parse_kind(const std::string& s) {
  if (s == "input") return NodeKind::Input;
  if (s == "output") return NodeKind::Output;
  if (s == "inference") return NodeKind::Inference;
  throw SpecError("unknown node kind '" + s + "'");
}

}  // namespace

Mechanism build_graph(const nlohmann::json& spec) {
  try {
    if (!spec.is_object()) throw SpecError("mechanism spec must be a JSON object");

    std::vector<AgentEntry> agents;
    for (const auto& a : spec.at("agents")) {
      agents.push_back({a.at("id").get<std::string>(), a.value("model", std::string{})});
    }
    AgentRoster roster(std::move(agents));

    std::vector<GraphNode> nodes;
    std::vector<std::size_t> agent_of;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& jn : spec.at("nodes")) {
      GraphNode node;
      node.id = jn.at("id").get<std::string>();
      node.kind = parse_kind(jn.at("kind").get<std::string>());
      if (node.kind == NodeKind::Inference) {
        node.prompt = jn.value("prompt", std::string{});
        if (!jn.contains("agent")) {
          throw SpecError("assignment not total: inference node '" + node.id + "' has no agent");
        }
        agent_of.push_back(roster.index_of(jn.at("agent").get<std::string>()));
      } else if (jn.contains("agent") || jn.contains("prompt")) {
        throw SpecError("node '" + node.id + "' of kind " + std::string(to_string(node.kind)) +
                        " cannot carry an agent or prompt");
      }
      if (!index.emplace(node.id, nodes.size()).second) {
        throw SpecError("duplicate node id '" + node.id + "'");
      }
      nodes.push_back(std::move(node));
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& je : spec.at("edges")) {
      if (!je.is_array() || je.size() != 2) throw SpecError("edge must be a [from, to] pair");
      auto from = je[0].get<std::string>();
      auto to = je[1].get<std::string>();
      auto f = index.find(from);
      auto t = index.find(to);
      if (f == index.end() || t == index.end()) {
        throw SpecError("dangling edge [" + from + ", " + to + "]");
      }
      edges.emplace_back(f->second, t->second);
    }

    MechanismGraph graph(std::move(nodes), std::move(edges));
    AgentAssignment assignment(std::move(agent_of), roster.size());
    return Mechanism{std::move(graph), std::move(assignment), std::move(roster)};
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed mechanism spec: ") + e.what());
  }
}

Mechanism parse_mechanism(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("invalid JSON: ") + e.what());
  }
  return build_graph(j);
}

Mechanism load_mechanism(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read mechanism spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mechanism(ss.str());
}

nlohmann::json render_mechanism(const Mechanism& mechanism) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : mechanism.roster.agents()) {
    agents.push_back({{"id", a.id}, {"model", a.model}});
  }
  const auto& g = mechanism.graph;
  nlohmann::json nodes = nlohmann::json::array();
  std::size_t inference_index = 0;
  for (const auto& node : g.nodes()) {
    nlohmann::json jn{{"id", node.id}, {"kind", to_string(node.kind)}};
    if (node.kind == NodeKind::Inference) {
      jn["prompt"] = node.prompt;
      jn["agent"] = mechanism.roster[mechanism.assignment(inference_index++)].id;
    }
    nodes.push_back(std::move(jn));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (auto [from, to] : g.edges()) {
    edges.push_back({g.node(from).id, g.node(to).id});
  }
  return {{"agents", agents}, {"nodes", nodes}, {"edges", edges}};
}

std::vector<std::vector<int>> assignment_matrix(const AgentAssignment& assignment,
                                                std::size_t n, std::size_t m) {
  if (assignment.size() != n) throw SpecError("assignment is not total over the inference nodes");
  std::vector<std::vector<int>> p(n, std::vector<int>(m, 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment(i) >= m) throw SpecError("assignment maps outside the agent set");
    p[i][assignment(i)] = 1;
  }
  return p;
}

std::vector<NodeColor> color_graph(const MechanismGraph& graph,
                                   const AgentAssignment& assignment,
                                   const AgentRoster& roster) {
  std::vector<NodeColor> colors(graph.node_count());
  colors[graph.input_node()].kind = NodeKind::Input;
  colors[graph.output_node()].kind = NodeKind::Output;
  const auto& inference = graph.inference_nodes();
  for (std::size_t i = 0; i < inference.size(); ++i) {
    const auto& node = graph.node(inference[i]);
    colors[inference[i]] = NodeColor{NodeKind::Inference, roster[assignment(i)].id, node.prompt_id};
  }
  return colors;
}

}  // namespace cmdforge
