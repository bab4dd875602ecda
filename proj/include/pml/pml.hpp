#pragma once

// Umbrella header for the pml metric-learning library.

#include "pml/dataset.hpp"
#include "pml/errors.hpp"
#include "pml/eval.hpp"
#include "pml/feature_io.hpp"
#include "pml/metric.hpp"
#include "pml/model_io.hpp"
#include "pml/objective.hpp"
#include "pml/optimizer.hpp"
#include "pml/parallel.hpp"
#include "pml/pca.hpp"
#include "pml/rng.hpp"
#include "pml/synth.hpp"
