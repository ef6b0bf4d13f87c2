#ifndef CTRW_CTRW_HPP
#define CTRW_CTRW_HPP

#include "ctrw/checks.hpp"
#include "ctrw/estimation.hpp"
#include "ctrw/events.hpp"
#include "ctrw/extreme_model.hpp"
#include "ctrw/mc_sim.hpp"
#include "ctrw/quadrature.hpp"
#include "ctrw/special_functions.hpp"
#include "ctrw/superposition.hpp"
#include "ctrw/superstat.hpp"

#endif  // CTRW_CTRW_HPP
