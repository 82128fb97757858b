#pragma once

#include "aghf/barrier.hpp"
#include "aghf/cases.hpp"
#include "aghf/config.hpp"
#include "aghf/constraints.hpp"
#include "aghf/error.hpp"
#include "aghf/extraction.hpp"
#include "aghf/flow.hpp"
#include "aghf/lagrangian.hpp"
#include "aghf/linalg.hpp"
#include "aghf/metric.hpp"
#include "aghf/pipeline.hpp"
#include "aghf/system.hpp"
