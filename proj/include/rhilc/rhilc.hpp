#pragma once

#include "rhilc/types.hpp"
#include "rhilc/lifted_model.hpp"
#include "rhilc/super_lifted.hpp"
#include "rhilc/performance_index.hpp"
#include "rhilc/learning_synthesis.hpp"
#include "rhilc/closed_loop.hpp"
#include "rhilc/converged_optimum.hpp"
#include "rhilc/plant_simulator.hpp"
#include "rhilc/config.hpp"
#include "rhilc/experiment.hpp"
