#pragma once

// Total variation bounds for stationary approximation of single-birth
// Markov chains, with brute-force oracles to certify every bound.

#include "bounds.hpp"
#include "chains.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "oracle.hpp"
#include "poisson.hpp"
