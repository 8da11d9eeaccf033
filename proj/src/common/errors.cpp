#include "lvl/errors.hpp"

namespace lvl {

ParseError::ParseError(const std::string& source, const std::string& what)
    : Error(source.empty() ? what : source + ": " + what), source_(source) {}

}  // namespace lvl
