#pragma once

#include "dwarfeval/analytics/boundedness.hpp"
#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/analytics/stats.hpp"
#include "dwarfeval/analytics/tracks.hpp"
#include "dwarfeval/io/series_io.hpp"
