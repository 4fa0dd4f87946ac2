#pragma once

// Umbrella header: the whole library in one include.

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/bootstrap.hpp"
#include "attrisk/cohort.hpp"
#include "attrisk/cohort_io.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/greenland_drescher.hpp"
#include "attrisk/hazards.hpp"
#include "attrisk/ipw.hpp"
#include "attrisk/landmark.hpp"
#include "attrisk/logistic.hpp"
#include "attrisk/paf.hpp"
#include "attrisk/params_io.hpp"
#include "attrisk/results_io.hpp"
#include "attrisk/rng.hpp"
#include "attrisk/scenarios.hpp"
#include "attrisk/simulate.hpp"
#include "attrisk/study.hpp"
