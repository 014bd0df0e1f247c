#pragma once

#include "dwarfeval/evaluation/compare.hpp"
#include "dwarfeval/evaluation/emit.hpp"
#include "dwarfeval/evaluation/moe.hpp"
