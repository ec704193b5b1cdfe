#pragma once

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/graph_gen.hpp"
#include "graphdiff/harness.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/posterior.hpp"
#include "graphdiff/propagation.hpp"
#include "graphdiff/rng.hpp"
#include "graphdiff/stats.hpp"
#include "graphdiff/targets.hpp"
