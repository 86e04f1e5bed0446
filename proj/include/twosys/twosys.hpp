#pragma once

// Two-system ensemble and adaptive Langevin samplers with benchmark harness.

#include "twosys/common.hpp"
#include "twosys/config.hpp"
#include "twosys/diagnostics.hpp"
#include "twosys/harness.hpp"
#include "twosys/kernels.hpp"
#include "twosys/linalg.hpp"
#include "twosys/rng.hpp"
#include "twosys/run.hpp"
#include "twosys/sweeps.hpp"
#include "twosys/targets.hpp"
#include "twosys/version.hpp"
