#include "dpen/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

namespace dpen {

bool Graph::adjacent(AgentId i, AgentId j) const {
  const auto& nb = adjacency_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

Graph build_graph(int n, const std::vector<std::pair<AgentId, AgentId>>& edges) {
  if (n <= 0) throw InvalidArgument("graph: agent count must be positive");

  std::set<std::pair<AgentId, AgentId>> canonical;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw InvalidArgument("graph: edge (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") out of range for n = " + std::to_string(n));
    }
    if (i == j) throw InvalidArgument("graph: self-loop at agent " + std::to_string(i));
    canonical.emplace(std::min(i, j), std::max(i, j));
  }

  Graph g;
  g.adjacency_.assign(n, {});
  g.edges_.assign(canonical.begin(), canonical.end());
  for (auto [i, j] : g.edges_) {
    g.adjacency_[i].push_back(j);
    g.adjacency_[j].push_back(i);
  }
  for (auto& nb : g.adjacency_) std::sort(nb.begin(), nb.end());

  std::vector<char> seen(n, 0);
  std::queue<AgentId> frontier;
  frontier.push(0);
  seen[0] = 1;
  while (!frontier.empty()) {
    const AgentId i = frontier.front();
    frontier.pop();
    for (AgentId j : g.adjacency_[i]) {
      if (!seen[j]) {
        seen[j] = 1;
        frontier.push(j);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    std::ostringstream msg;
    msg << "graph: disconnected; agents {";
    bool first = true;
    for (int i = 0; i < n; ++i) {
      if (!seen[i]) {
        msg << (first ? "" : ", ") << i;
        first = false;
      }
    }
    msg << "} are not reachable from the component containing agent 0";
    throw InvalidArgument(msg.str());
  }
  return g;
}

Graph ring_graph(int n) {
  if (n < 1) throw InvalidArgument("ring_graph: n must be positive");
  std::vector<std::pair<AgentId, AgentId>> edges;
  if (n == 2) edges.emplace_back(0, 1);
  if (n > 2) {
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  }
  return build_graph(n, edges);
}

Graph path_graph(int n) {
  std::vector<std::pair<AgentId, AgentId>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return build_graph(n, edges);
}

Graph complete_graph(int n) {
  std::vector<std::pair<AgentId, AgentId>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return build_graph(n, edges);
}

std::vector<AgentId> k_hop_neighbors(const Graph& g, AgentId i, int k) {
  if (k != 1 && k != 2) throw InvalidArgument("k_hop_neighbors: only k = 1 or 2 is supported");
  if (i < 0 || i >= g.n()) throw InvalidArgument("k_hop_neighbors: agent out of range");

  std::set<AgentId> out(g.neighbors(i).begin(), g.neighbors(i).end());
  if (k == 2) {
    for (AgentId j : g.neighbors(i)) out.insert(g.neighbors(j).begin(), g.neighbors(j).end());
  }
  out.erase(i);
  return {out.begin(), out.end()};
}

}  // namespace dpen
