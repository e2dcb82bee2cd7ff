#pragma once

// Skeleton regression: graph skeletons from point clouds, an intrinsic
// metric on them, and regressors that smooth along the skeleton instead of
// through ambient space.

#include "core.hpp"
#include "datagen.hpp"
#include "graph_penalty.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "projection.hpp"
#include "regressors.hpp"
#include "rng.hpp"
#include "skeleton_builder.hpp"
