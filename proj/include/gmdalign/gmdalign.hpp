/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"
#include "gmdalign/gmd.hpp"
#include "gmdalign/learners.hpp"
#include "gmdalign/metric.hpp"
#include "gmdalign/pipeline.hpp"
#include "gmdalign/rng.hpp"
#include "gmdalign/synth.hpp"
#include "gmdalign/weighting.hpp"
