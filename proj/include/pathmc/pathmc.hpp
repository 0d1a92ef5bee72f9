#pragma once

// Umbrella header: path-space Monte Carlo library for constrained Gaussian
// path laws — signed-distance geometry, bridge/Brownian samplers with
// crossing corrections, first-passage laws with drift, boundary-shell
// estimators, a reflecting chain on the discretized path space, and the
// experiment/report plumbing.

#include "pathmc/config.hpp"
#include "pathmc/errors.hpp"
#include "pathmc/estimators.hpp"
#include "pathmc/experiments.hpp"
#include "pathmc/gauss_path.hpp"
#include "pathmc/geometry.hpp"
#include "pathmc/hitting1d.hpp"
#include "pathmc/linalg.hpp"
#include "pathmc/quadrature.hpp"
#include "pathmc/reflect_ou.hpp"
#include "pathmc/report.hpp"
#include "pathmc/rng.hpp"
#include "pathmc/stats.hpp"
#include "pathmc/version.hpp"
