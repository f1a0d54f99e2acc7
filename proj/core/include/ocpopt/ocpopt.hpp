#pragma once

#include "ocpopt/analysis.hpp"
#include "ocpopt/errors.hpp"
#include "ocpopt/numeric.hpp"
#include "ocpopt/oracles.hpp"
#include "ocpopt/problems.hpp"
#include "ocpopt/solvers.hpp"
