#pragma once

// Umbrella header for the whole library.

#include "tagrank/baselines.hpp"
#include "tagrank/compare.hpp"
#include "tagrank/core.hpp"
#include "tagrank/data.hpp"
#include "tagrank/losses.hpp"
#include "tagrank/metrics.hpp"
#include "tagrank/optimizer.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/scorer.hpp"
