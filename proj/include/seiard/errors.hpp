#ifndef SEIARD_ERRORS_HPP
#define SEIARD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace seiard {

/// A model parameter lies outside its admissible domain.
class ParameterDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The integrator produced a non-finite or strongly negative state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Every evaluation of an objective returned +inf.
class NoFeasiblePointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seiard

#endif  // SEIARD_ERRORS_HPP
