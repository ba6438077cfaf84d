#pragma once

#include <vector>

#include "dpen/graph.hpp"
#include "dpen/types.hpp"

namespace dpen {

/// An agent together with everything it may read in one round: itself and
/// its 1- and 2-hop neighbors.
class Neighborhood {
 public:
  Neighborhood(const Graph& g, AgentId owner);

  AgentId owner() const { return owner_; }
  bool contains(AgentId j) const { return j >= 0 && j < Index(allowed_.size()) && allowed_[j]; }

  /// Throws LocalityViolation naming (owner, j) when j is out of reach.
  void require(AgentId j, const char* what) const {
    if (!contains(j)) throw LocalityViolation(owner_, j, what);
  }

 private:
  AgentId owner_;
  std::vector<char> allowed_;
};

std::vector<Neighborhood> two_hop_neighborhoods(const Graph& g);

}  // namespace dpen
