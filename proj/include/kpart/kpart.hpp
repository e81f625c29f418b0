#pragma once

#include "kpart/basis.hpp"
#include "kpart/commands.hpp"
#include "kpart/errors.hpp"
#include "kpart/knots.hpp"
#include "kpart/linalg.hpp"
#include "kpart/model_io.hpp"
#include "kpart/ols.hpp"
#include "kpart/search.hpp"
#include "kpart/series.hpp"
