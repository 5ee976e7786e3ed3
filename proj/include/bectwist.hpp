#pragma once

#include "bectwist/core/constants.hpp"
#include "bectwist/core/errors.hpp"
#include "bectwist/core/field.hpp"
#include "bectwist/core/grid.hpp"
#include "bectwist/core/snapshot.hpp"
#include "bectwist/core/spectral.hpp"
#include "bectwist/core/split_step.hpp"
#include "bectwist/lambda/estimators.hpp"
#include "bectwist/meanfield/gpe.hpp"
#include "bectwist/meanfield/ground_state.hpp"
#include "bectwist/meanfield/params.hpp"
#include "bectwist/meanfield/pulse.hpp"
#include "bectwist/observables/spin.hpp"
#include "bectwist/observables/squeezing.hpp"
#include "bectwist/orchestration/config.hpp"
#include "bectwist/orchestration/manifest.hpp"
#include "bectwist/orchestration/pipeline.hpp"
#include "bectwist/orchestration/revival.hpp"
#include "bectwist/twomode/chi.hpp"
#include "bectwist/twomode/fock_oracle.hpp"
#include "bectwist/twomode/kerr.hpp"
#include "bectwist/wigner/accumulator.hpp"
#include "bectwist/wigner/ensemble.hpp"
#include "bectwist/wigner/rng.hpp"
#include "bectwist/wigner/sampling.hpp"
