#pragma once

// Umbrella header.

#include "activefv/errors.hpp"
#include "activefv/log.hpp"
#include "activefv/grid.hpp"
#include "activefv/chemo.hpp"
#include "activefv/kernels.hpp"
#include "activefv/observables.hpp"
#include "activefv/stepper.hpp"
#include "activefv/initial.hpp"
#include "activefv/diagnostics.hpp"
#include "activefv/expression.hpp"
#include "activefv/config.hpp"
#include "activefv/snapshot.hpp"
#include "activefv/cli.hpp"
