#pragma once

#include "fleet/errors.hpp"
#include "fleet/geometry.hpp"
#include "fleet/core_model.hpp"
#include "fleet/barrier.hpp"
#include "fleet/snapshot.hpp"
#include "fleet/controllers.hpp"
#include "fleet/misbehavior.hpp"
#include "fleet/simulator.hpp"
#include "fleet/scenario_io.hpp"
#include "fleet/trajectory_csv.hpp"
#include "fleet/svg_plot.hpp"
#include "fleet/grad_check.hpp"
