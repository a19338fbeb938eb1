#pragma once

#include <string>
#include <string_view>

#include "avatarsim/dsl/ast.hpp"

namespace avatarsim::dsl {

/// Parses and type-checks an avatar script. Throws AvatarError (Parse for
/// syntax, Type for undeclared names, type mismatches and loop constructs).
AvatarSpec parse(std::string_view source);

/// Syntax only; no name resolution or type checking.
AvatarSpec parse_syntax(std::string_view source);

/// Canonical source text. parse(print(s)) == s for every valid spec.
std::string print(const AvatarSpec& spec);

}  // namespace avatarsim::dsl
