#pragma once

// Umbrella include for the whole library.

#include "cat/autodiff.hpp"
#include "cat/checkpoint.hpp"
#include "cat/dataset.hpp"
#include "cat/errors.hpp"
#include "cat/experiment.hpp"
#include "cat/idx.hpp"
#include "cat/knowledge_base.hpp"
#include "cat/kta.hpp"
#include "cat/learner.hpp"
#include "cat/mask_store.hpp"
#include "cat/report.hpp"
#include "cat/rng.hpp"
#include "cat/similarity.hpp"
#include "cat/tensor.hpp"
#include "cat/training.hpp"
