#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dpen {

using Index = Eigen::Index;
using AgentId = int;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised on malformed input: bad graphs, inconsistent problem data, invalid parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a linear system that must be nonsingular is not (e.g. N(x) when LICQ fails).
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a problem callback returns a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an integrator produces non-finite state.
class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an agent-local computation reads data outside its 2-hop neighborhood.
class LocalityViolation : public std::runtime_error {
 public:
  LocalityViolation(AgentId agent, AgentId source, const std::string& what)
      : std::runtime_error("agent " + std::to_string(agent) + " read " + what + " of agent " +
                           std::to_string(source) + " outside its 2-hop neighborhood"),
        agent_(agent),
        source_(source) {}

  AgentId agent() const { return agent_; }
  AgentId source() const { return source_; }

 private:
  AgentId agent_;
  AgentId source_;
};

}  // namespace dpen
