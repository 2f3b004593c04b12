#pragma once

#include "mbscc/amortization.hpp"
#include "mbscc/coupon_curve.hpp"
#include "mbscc/coupon_solvers.hpp"
#include "mbscc/errors.hpp"
#include "mbscc/factor_model.hpp"
#include "mbscc/intensity.hpp"
#include "mbscc/path_bank.hpp"
#include "mbscc/path_engine.hpp"
#include "mbscc/pool_simulator.hpp"
#include "mbscc/rng.hpp"
