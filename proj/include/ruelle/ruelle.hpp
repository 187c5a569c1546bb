#pragma once

#include "ruelle/error.hpp"
#include "ruelle/subshift.hpp"
#include "ruelle/depth_fn.hpp"
#include "ruelle/transfer.hpp"
#include "ruelle/stats.hpp"
#include "ruelle/thermo.hpp"
#include "ruelle/twist.hpp"
#include "ruelle/orbits.hpp"
#include "ruelle/dolgopyat.hpp"
#include "ruelle/correlator.hpp"
#include "ruelle/model.hpp"
