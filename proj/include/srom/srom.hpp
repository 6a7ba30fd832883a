#pragma once

#include "srom/cases.hpp"
#include "srom/errors.hpp"
#include "srom/experiment.hpp"
#include "srom/fv.hpp"
#include "srom/grid.hpp"
#include "srom/hyper.hpp"
#include "srom/linalg.hpp"
#include "srom/reduced_mesh.hpp"
#include "srom/rom.hpp"
#include "srom/sampling.hpp"
#include "srom/shifts.hpp"
