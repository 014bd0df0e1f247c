#pragma once

#include "dwarfeval/profiler/eea.hpp"
#include "dwarfeval/profiler/profile.hpp"
#include "dwarfeval/profiler/sampler.hpp"
