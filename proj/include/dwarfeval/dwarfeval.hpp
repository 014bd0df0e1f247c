#pragma once

// Umbrella header for the whole toolkit.

#include "dwarfeval/analytics.hpp"
#include "dwarfeval/cli/campaign.hpp"
#include "dwarfeval/error.hpp"
#include "dwarfeval/evaluation.hpp"
#include "dwarfeval/harness.hpp"
#include "dwarfeval/kernels.hpp"
#include "dwarfeval/parallel.hpp"
#include "dwarfeval/profiler.hpp"
#include "dwarfeval/rng.hpp"
#include "dwarfeval/types.hpp"
