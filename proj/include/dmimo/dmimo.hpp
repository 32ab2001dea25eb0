#pragma once

#include "dmimo/params.hpp"
#include "dmimo/topology.hpp"
#include "dmimo/linalg.hpp"
#include "dmimo/fft.hpp"
#include "dmimo/baseband.hpp"
#include "dmimo/dimensioning.hpp"
#include "dmimo/scheduler.hpp"
#include "dmimo/simulator.hpp"
#include "dmimo/dse.hpp"
#include "dmimo/report.hpp"
