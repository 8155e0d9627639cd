#pragma once

#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"
#include "obdaml/text.hpp"
#include "obdaml/dataset.hpp"
#include "obdaml/synthetic.hpp"
#include "obdaml/rollup.hpp"
#include "obdaml/vectorize.hpp"
#include "obdaml/prediction.hpp"
#include "obdaml/naive_bayes.hpp"
#include "obdaml/random_forest.hpp"
#include "obdaml/metrics.hpp"
#include "obdaml/pipeline.hpp"
#include "obdaml/model_io.hpp"
#include "obdaml/sweep.hpp"
#include "obdaml/kbmap.hpp"
#include "obdaml/service.hpp"
