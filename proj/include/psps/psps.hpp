#pragma once

#include "psps/network.hpp"
#include "psps/ingest.hpp"
#include "psps/solver.hpp"
#include "psps/opt_psps.hpp"
#include "psps/fairness.hpp"
#include "psps/rolling.hpp"
#include "psps/metrics.hpp"
#include "psps/report.hpp"
#include "psps/synthetic.hpp"
#include "psps/season_io.hpp"
