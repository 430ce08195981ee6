#pragma once

// Umbrella header.

#include "bethe.hpp"
#include "config.hpp"
#include "duality.hpp"
#include "dynamics.hpp"
#include "enumerate.hpp"
#include "experiments.hpp"
#include "field.hpp"
#include "gibbs.hpp"
#include "hopf_cole.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "semigroup.hpp"
#include "stats.hpp"
#include "table.hpp"
#include "version.hpp"
#include "walk.hpp"
