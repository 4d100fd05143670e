#pragma once

#include "vsrn/attention_viz.hpp"
#include "vsrn/errors.hpp"
#include "vsrn/global_reasoning.hpp"
#include "vsrn/grad_check.hpp"
#include "vsrn/harness/checkpoint.hpp"
#include "vsrn/harness/config.hpp"
#include "vsrn/harness/corpus.hpp"
#include "vsrn/harness/model.hpp"
#include "vsrn/harness/optim.hpp"
#include "vsrn/harness/train.hpp"
#include "vsrn/objectives.hpp"
#include "vsrn/region_reasoning.hpp"
#include "vsrn/retrieval.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/tensor.hpp"
#include "vsrn/text_pipeline.hpp"
