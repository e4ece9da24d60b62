#pragma once

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"
#include "d2ace/dataio/dataset.hpp"
#include "d2ace/dataio/folds.hpp"
#include "d2ace/dataio/scaler.hpp"
#include "d2ace/dataio/synthetic.hpp"
#include "d2ace/model/mlp.hpp"
#include "d2ace/tracking/tracking.hpp"
#include "d2ace/weighting/weighting.hpp"
#include "d2ace/sampling/sampling.hpp"
#include "d2ace/baselines/selectors.hpp"
#include "d2ace/eval/metrics.hpp"
#include "d2ace/verify/lemmas.hpp"
#include "d2ace/experiment/config.hpp"
#include "d2ace/experiment/run.hpp"
