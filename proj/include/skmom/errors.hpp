#pragma once

#include <stdexcept>
#include <string>

namespace skmom {

/// Raised when a computation would exceed one of the configured enumeration
/// budgets. `limit_name()` names the budget constant that refused the work.
class ResourceLimitError : public std::runtime_error {
 public:
  ResourceLimitError(std::string limit_name, const std::string& what)
      : std::runtime_error(what), limit_name_(std::move(limit_name)) {}

  const std::string& limit_name() const noexcept { return limit_name_; }

 private:
  std::string limit_name_;
};

/// No admissible donor cell for a boundary perturbation.
class InfeasiblePerturbation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace skmom
