#include "dpen/locality.hpp"

namespace dpen {

Neighborhood::Neighborhood(const Graph& g, AgentId owner) : owner_(owner), allowed_(g.n(), 0) {
  allowed_[owner] = 1;
  for (AgentId j : g.neighbors(owner)) {
    allowed_[j] = 1;
    for (AgentId k : g.neighbors(j)) allowed_[k] = 1;
  }
}

std::vector<Neighborhood> two_hop_neighborhoods(const Graph& g) {
  std::vector<Neighborhood> out;
  out.reserve(g.n());
  for (AgentId i = 0; i < g.n(); ++i) out.emplace_back(g, i);
  return out;
}

}  // namespace dpen
