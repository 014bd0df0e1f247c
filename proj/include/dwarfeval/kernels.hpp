#pragma once

#include "dwarfeval/kernels/bptree.hpp"
#include "dwarfeval/kernels/kmeans.hpp"
#include "dwarfeval/kernels/lud.hpp"
#include "dwarfeval/kernels/workload.hpp"
