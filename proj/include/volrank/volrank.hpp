#pragma once

// Umbrella header: rank inference for spot covolatility matrices from noisy
// high-frequency observations via perturbed pre-averaged determinants.

#include "volrank/common.hpp"
#include "volrank/gamma_oracle.hpp"
#include "volrank/harness.hpp"
#include "volrank/hypotest.hpp"
#include "volrank/matperturb.hpp"
#include "volrank/models.hpp"
#include "volrank/preavg.hpp"
#include "volrank/rankstats.hpp"
#include "volrank/rng.hpp"
#include "volrank/simulate.hpp"
#include "volrank/weights.hpp"
