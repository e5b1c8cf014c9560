#pragma once

// Everything except the command-line front end (cli.hpp, which needs CLI11).

#include "config.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "weightdist.hpp"
#include "sampler.hpp"
#include "wrg_core.hpp"
#include "snapshot_io.hpp"
#include "limit_theory.hpp"
#include "ppp_limits.hpp"
#include "experiments.hpp"
#include "acceptance.hpp"
