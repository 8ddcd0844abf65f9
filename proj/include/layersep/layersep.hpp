#pragma once

// Umbrella header for the full library.

#include "layersep/errors.hpp"
#include "layersep/expdata.hpp"
#include "layersep/graspfsm.hpp"
#include "layersep/materials.hpp"
#include "layersep/mechanics.hpp"
#include "layersep/svg.hpp"
#include "layersep/sweep.hpp"
#include "layersep/units.hpp"
