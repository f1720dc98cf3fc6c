#pragma once

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/grid.hpp"
#include "mlrs/harness.hpp"
#include "mlrs/learners.hpp"
#include "mlrs/matrix.hpp"
#include "mlrs/meta_features.hpp"
#include "mlrs/parallel.hpp"
#include "mlrs/pool.hpp"
#include "mlrs/recommender.hpp"
#include "mlrs/registry.hpp"
#include "mlrs/rng.hpp"
#include "mlrs/selection.hpp"
