#pragma once

// Umbrella header: the whole library in one include.

#include "dotadmm/analysis.hpp"
#include "dotadmm/config.hpp"
#include "dotadmm/costs.hpp"
#include "dotadmm/csv.hpp"
#include "dotadmm/engine.hpp"
#include "dotadmm/errors.hpp"
#include "dotadmm/harness.hpp"
#include "dotadmm/oracles.hpp"
#include "dotadmm/rng.hpp"
#include "dotadmm/run.hpp"
#include "dotadmm/topology.hpp"
#include "dotadmm/validate.hpp"
