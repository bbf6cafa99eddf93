#pragma once

#include "bscan/approx_enum.hpp"
#include "bscan/calibration.hpp"
#include "bscan/dataset.hpp"
#include "bscan/detection.hpp"
#include "bscan/error.hpp"
#include "bscan/oracle.hpp"
#include "bscan/statistic.hpp"
#include "bscan/synth.hpp"
