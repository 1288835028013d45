#include "gft/error.hpp"

namespace gft {

std::string GridLocation::to_string() const {
  return "(level " + std::to_string(level) + ", row " + std::to_string(row) + ", col " + std::to_string(col) + ")";
}

DomainError::DomainError(const std::string& what, GridLocation where, std::string field)
    : Error(what + " at " + (field.empty() ? std::string() : field + " ") + where.to_string()),
      reason_(what),
      where_(where),
      field_(std::move(field)) {}

StabilityError::StabilityError(const std::string& what, std::size_t step, std::optional<GridLocation> where)
    : Error(what + " (step " + std::to_string(step) + (where ? ", " + where->to_string() : std::string()) + ")"),
      reason_(what),
      step_(step),
      where_(where) {}

}  // namespace gft
