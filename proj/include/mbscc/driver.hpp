#pragma once

#include "driver/config.hpp"
#include "driver/report.hpp"
#include "driver/run.hpp"
