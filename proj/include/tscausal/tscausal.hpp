#pragma once

// Causal discovery for multivariate time series: a transfer-entropy feature
// filter feeding PCMCI (the F-PCMCI pipeline), with a synthetic benchmark
// harness and a trajectory feature extractor for spatial-interaction data.

#include "tscausal/ci_test.hpp"
#include "tscausal/dataset.hpp"
#include "tscausal/error.hpp"
#include "tscausal/hrsi.hpp"
#include "tscausal/pcmci.hpp"
#include "tscausal/rng.hpp"
#include "tscausal/serialize.hpp"
#include "tscausal/stats.hpp"
#include "tscausal/synth.hpp"
#include "tscausal/te_filter.hpp"
#include "tscausal/transfer_entropy.hpp"
#include "tscausal/version.hpp"
