#pragma once

#include "infkyle/analytics.hpp"
#include "infkyle/cli_runner.hpp"
#include "infkyle/config.hpp"
#include "infkyle/csv.hpp"
#include "infkyle/equilibrium_solver.hpp"
#include "infkyle/error.hpp"
#include "infkyle/info_kernel.hpp"
#include "infkyle/insider_objective.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"
#include "infkyle/options_bridge.hpp"
#include "infkyle/orderflow_sim.hpp"
#include "infkyle/posterior_engine.hpp"
#include "infkyle/quadrature.hpp"
