#pragma once

#include "rlvr/advantage.hpp"
#include "rlvr/config.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/experiment.hpp"
#include "rlvr/metrics_io.hpp"
#include "rlvr/objective.hpp"
#include "rlvr/parallel.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/reuse.hpp"
#include "rlvr/rng.hpp"
#include "rlvr/rollout.hpp"
#include "rlvr/sweep.hpp"
#include "rlvr/trainer.hpp"
#include "rlvr/types.hpp"
#include "rlvr/verifier.hpp"
