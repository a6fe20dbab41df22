#ifndef FDRELAY_ERRORS_HPP
#define FDRELAY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fdrelay {

// A parameter is outside its domain. field() names the offending field.
class ParameterError : public std::invalid_argument {
public:
  ParameterError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// A caller violated an operation's precondition.
class ContractError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// The requested closed form does not apply to this parameterization
// (e.g. two-user formulas on n != 2).
class WrongModelError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Exhaustive enumeration would exceed the resource bound.
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Truncated chain left too much probability mass beyond the last state.
class ResolutionError : public std::runtime_error {
public:
  ResolutionError(const std::string& what, double tail_mass)
      : std::runtime_error(what), tail_mass_(tail_mass) {}
  double tail_mass() const noexcept { return tail_mass_; }

private:
  double tail_mass_;
};

// The relay queue is not stable (lambda1 >= mu). Carries the quantities a
// caller needs to report the instability or fall back to saturated-relay
// formulas.
class InstabilityError : public std::runtime_error {
public:
  InstabilityError(const std::string& what, double q0_min, double lambda1, double mu)
      : std::runtime_error(what), q0_min_(q0_min), lambda1_(lambda1), mu_(mu) {}
  double q0_min() const noexcept { return q0_min_; }
  double lambda1() const noexcept { return lambda1_; }
  double mu() const noexcept { return mu_; }

private:
  double q0_min_;
  double lambda1_;
  double mu_;
};

}  // namespace fdrelay

#endif  // FDRELAY_ERRORS_HPP
