#pragma once

#include "smmergo/errors.hpp"
#include "smmergo/rng.hpp"
#include "smmergo/params.hpp"
#include "smmergo/models.hpp"
#include "smmergo/moments.hpp"
#include "smmergo/stats.hpp"
#include "smmergo/sobol.hpp"
#include "smmergo/seed_plan.hpp"
#include "smmergo/parallel.hpp"
#include "smmergo/smm.hpp"
#include "smmergo/report.hpp"
#include "smmergo/harness.hpp"
#include "smmergo/config.hpp"
