#pragma once

#include "coupled_explore/geometry.hpp"
#include "coupled_explore/grid_map.hpp"
#include "coupled_explore/sensor.hpp"
#include "coupled_explore/localization.hpp"
#include "coupled_explore/tbayesmap.hpp"
#include "coupled_explore/entropy.hpp"
#include "coupled_explore/sim.hpp"
#include "coupled_explore/explore.hpp"
#include "coupled_explore/fixtures.hpp"
#include "coupled_explore/experiment.hpp"
