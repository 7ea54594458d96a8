#pragma once

// Umbrella header.

#include "roughwall/error.hpp"
#include "roughwall/tensor.hpp"
#include "roughwall/inequalities.hpp"
#include "roughwall/quadrature.hpp"
#include "roughwall/pattern.hpp"
#include "roughwall/mesh.hpp"
#include "roughwall/fe_space.hpp"
#include "roughwall/solver.hpp"
#include "roughwall/analytic.hpp"
#include "roughwall/analysis.hpp"
#include "roughwall/io.hpp"
#include "roughwall/config.hpp"
