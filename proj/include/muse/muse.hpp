#pragma once

#include "muse/baselines.hpp"
#include "muse/config.hpp"
#include "muse/errors.hpp"
#include "muse/estimator.hpp"
#include "muse/experiments.hpp"
#include "muse/harness.hpp"
#include "muse/inference.hpp"
#include "muse/process.hpp"
#include "muse/random.hpp"
#include "muse/reward.hpp"
#include "muse/stopping.hpp"
