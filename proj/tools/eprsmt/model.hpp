// Finite model extraction from a propositional assignment: quotient the
// constant pool by the equality valuation, then print universes, constants
// and relation tables.
#pragma once

#include <string>

#include "ground.hpp"
#include "sat.hpp"

namespace eprsmt {

std::string render_model(const Ctx& ctx, const GroundResult& g, const Sat& sat);

}  // namespace eprsmt
