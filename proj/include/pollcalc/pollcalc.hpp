#pragma once

// Everything except JSON configuration (config.hpp), which needs the vendored JSON header.

#include "branching.hpp"
#include "cycletime.hpp"
#include "distribution.hpp"
#include "error.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "numerics.hpp"
#include "optimizer.hpp"
#include "report.hpp"
#include "simulator.hpp"
#include "taylor.hpp"
#include "waiting.hpp"
