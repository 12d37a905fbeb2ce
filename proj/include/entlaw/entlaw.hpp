#pragma once

// Umbrella header: symbolic core, model DSL, supplementary-conservation-law
// analysis, built-in systems, and the numerical drift validator.

#include "entlaw/analysis.hpp"
#include "entlaw/baer_nunziato.hpp"
#include "entlaw/euler.hpp"
#include "entlaw/eval.hpp"
#include "entlaw/expr.hpp"
#include "entlaw/fvcheck.hpp"
#include "entlaw/model.hpp"
#include "entlaw/parser.hpp"
#include "entlaw/plasma.hpp"
#include "entlaw/rational.hpp"
#include "entlaw/sampler.hpp"
#include "entlaw/system.hpp"
#include "entlaw/tape.hpp"
#include "entlaw/zerotest.hpp"
