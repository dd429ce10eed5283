#pragma once

// Umbrella header for the nonlinear drift-diffusion laboratory.

#include "fpklab/convergence.hpp"
#include "fpklab/csv_io.hpp"
#include "fpklab/drift.hpp"
#include "fpklab/errors.hpp"
#include "fpklab/functions.hpp"
#include "fpklab/grid.hpp"
#include "fpklab/hconditions.hpp"
#include "fpklab/invariants.hpp"
#include "fpklab/linear_solver.hpp"
#include "fpklab/measures.hpp"
#include "fpklab/nonlinear.hpp"
#include "fpklab/particles.hpp"
#include "fpklab/runner.hpp"
#include "fpklab/scenario.hpp"
#include "fpklab/stationary.hpp"
#include "fpklab/trajectory.hpp"
#include "fpklab/weights.hpp"
