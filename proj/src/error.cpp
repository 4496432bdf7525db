#include "eltmcm/error.hpp"

namespace eltmcm {

ParameterError::ParameterError(std::string field, const std::string& message)
    : Error(field + ": " + message), field_(std::move(field)) {}

}  // namespace eltmcm
