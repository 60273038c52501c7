#ifndef ODFLOW_ODFLOW_HPP
#define ODFLOW_ODFLOW_HPP

#include "odflow/concentration.hpp"
#include "odflow/csv.hpp"
#include "odflow/elp.hpp"
#include "odflow/error.hpp"
#include "odflow/exchange.hpp"
#include "odflow/model.hpp"
#include "odflow/rng.hpp"
#include "odflow/route.hpp"
#include "odflow/route_game.hpp"
#include "odflow/stats.hpp"
#include "odflow/survey.hpp"

#endif  // ODFLOW_ODFLOW_HPP
