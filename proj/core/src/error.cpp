#include "pscape/error.hpp"

namespace pscape {

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(what + " at line " + std::to_string(line)), line_(line) {}

} // namespace pscape
