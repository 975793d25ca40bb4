#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace cmdforge {

enum class NodeKind { Input, Output, Inference };

std::string_view to_string(NodeKind kind);

// Digest of the canonicalized decorator text.
using PromptId = std::string;

PromptId prompt_digest(std::string_view decorator_text);

struct GraphNode {
  std::string id;
  NodeKind kind = NodeKind::Inference;
  std::string prompt;  // decorator text, empty for Input/Output
  PromptId prompt_id;  // empty for Input/Output
};

// Directed graph with exactly one Input and one Output node. Every inference
// node lies on some Input -> Output path; no edge enters Input or leaves
// Output. Immutable after construction.
class MechanismGraph {
 public:
  MechanismGraph(std::vector<GraphNode> nodes,
                 std::vector<std::pair<std::size_t, std::size_t>> edges);

  std::size_t node_count() const { return nodes_.size(); }
  const GraphNode& node(std::size_t index) const { return nodes_[index]; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }

  // Sorted, duplicate-free.
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  bool has_edge(std::size_t from, std::size_t to) const {
    return adjacency_[from * nodes_.size() + to] != 0;
  }

  std::size_t input_node() const { return input_; }
  std::size_t output_node() const { return output_; }

  // Node indices of the inference nodes, in declaration order. Position i in
  // this list is inference index i.
  const std::vector<std::size_t>& inference_nodes() const { return inference_; }
  std::size_t inference_count() const { return inference_.size(); }

  std::size_t index_of(std::string_view node_id) const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<unsigned char> adjacency_;
  std::vector<std::size_t> inference_;
  std::size_t input_ = 0;
  std::size_t output_ = 0;
};

struct AgentEntry {
  std::string id;
  std::string model;
};

class AgentRoster {
 public:
  AgentRoster() = default;
  explicit AgentRoster(std::vector<AgentEntry> agents);

  std::size_t size() const { return agents_.size(); }
  const AgentEntry& operator[](std::size_t j) const { return agents_[j]; }
  const std::vector<AgentEntry>& agents() const { return agents_; }
  std::size_t index_of(std::string_view agent_id) const;

 private:
  std::vector<AgentEntry> agents_;
};

// Total map from inference index to agent index.
class AgentAssignment {
 public:
  AgentAssignment() = default;
  AgentAssignment(std::vector<std::size_t> agent_of, std::size_t agent_count);

  std::size_t operator()(std::size_t inference_index) const { return agent_of_[inference_index]; }
  std::size_t size() const { return agent_of_.size(); }
  std::size_t agent_count() const { return agent_count_; }
  const std::vector<std::size_t>& map() const { return agent_of_; }

  friend bool operator==(const AgentAssignment&, const AgentAssignment&) = default;

 private:
  std::vector<std::size_t> agent_of_;
  std::size_t agent_count_ = 0;
};

struct Mechanism {
  MechanismGraph graph;
  AgentAssignment assignment;
  AgentRoster roster;
};

// Parses the JSON mechanism document:
//   {"agents": [{"id", "model"}], "nodes": [{"id", "kind", "prompt"?, "agent"?}],
//    "edges": [[from, to], ...]}
// Throws SpecError on any structural violation.
Mechanism build_graph(const nlohmann::json& spec);
Mechanism parse_mechanism(std::string_view text);
Mechanism load_mechanism(const std::filesystem::path& path);

// Inverse of build_graph; nodes in declaration order, edges sorted.
nlohmann::json render_mechanism(const Mechanism& mechanism);

// P[i][j] = 1 iff assignment(i) == j.
std::vector<std::vector<int>> assignment_matrix(const AgentAssignment& assignment,
                                                std::size_t n, std::size_t m);

struct NodeColor {
  NodeKind kind = NodeKind::Inference;
  std::string agent;  // empty for Input/Output
  PromptId prompt;    // empty for Input/Output

  friend bool operator==(const NodeColor&, const NodeColor&) = default;
  friend auto operator<=>(const NodeColor&, const NodeColor&) = default;
};

// Color per node index. Input and Output carry reserved colors that never
// equal an inference color.
std::vector<NodeColor> color_graph(const MechanismGraph& graph,
                                   const AgentAssignment& assignment,
                                   const AgentRoster& roster);

}  // namespace cmdforge
