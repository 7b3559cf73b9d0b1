#pragma once

#include "maxent/domain.hpp"
#include "maxent/errors.hpp"
#include "maxent/metrics.hpp"
#include "maxent/numeric.hpp"
#include "maxent/oracle.hpp"
#include "maxent/prior.hpp"
#include "maxent/rng.hpp"
#include "maxent/sampler.hpp"
#include "maxent/serialize.hpp"
#include "maxent/solver.hpp"
