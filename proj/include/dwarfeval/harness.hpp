#pragma once

#include "dwarfeval/harness/harness.hpp"
#include "dwarfeval/harness/presets.hpp"
