#pragma once

#include "diagcoag/core.hpp"
#include "diagcoag/dynamics.hpp"
#include "diagcoag/errors.hpp"
#include "diagcoag/io.hpp"
#include "diagcoag/local_expansion.hpp"
#include "diagcoag/log_grid.hpp"
#include "diagcoag/mu_solver.hpp"
#include "diagcoag/params.hpp"
#include "diagcoag/pipeline.hpp"
#include "diagcoag/profile.hpp"
#include "diagcoag/profile_integrator.hpp"
#include "diagcoag/tail_analysis.hpp"
