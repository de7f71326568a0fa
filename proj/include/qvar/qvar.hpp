#pragma once

#include "qvar/analyticity.hpp"
#include "qvar/errors.hpp"
#include "qvar/experiments.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/parallel.hpp"
#include "qvar/semigroups.hpp"
#include "qvar/spectrum.hpp"
#include "qvar/types.hpp"
#include "qvar/variation.hpp"
#include "qvar/zoo.hpp"
