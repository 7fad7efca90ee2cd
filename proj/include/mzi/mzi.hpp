#pragma once

#include "mzi/analysis.hpp"
#include "mzi/channel_dynamics.hpp"
#include "mzi/config.hpp"
#include "mzi/control.hpp"
#include "mzi/detection.hpp"
#include "mzi/errors.hpp"
#include "mzi/interferometer.hpp"
#include "mzi/output.hpp"
#include "mzi/polarization.hpp"
#include "mzi/scenario.hpp"
