#include "vms/errors.hpp"

namespace vms {
namespace {

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    if (!e.field.empty()) {
      out += e.field;
      out += ": ";
    }
    out += e.message;
  }
  return out.empty() ? std::string("validation failed") : out;
}

}  // namespace

ValidationError::ValidationError(std::string message)
    : Error(message), errors_{FieldError{"", std::move(message)}} {}

ValidationError::ValidationError(std::vector<FieldError> errors)
    : Error(join_errors(errors)), errors_(std::move(errors)) {}

}  // namespace vms
