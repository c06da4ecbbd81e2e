#pragma once

#include "dmrisk/duality.hpp"
#include "dmrisk/errors.hpp"
#include "dmrisk/ext_real.hpp"
#include "dmrisk/extension.hpp"
#include "dmrisk/kusuoka.hpp"
#include "dmrisk/orlicz.hpp"
#include "dmrisk/partition.hpp"
#include "dmrisk/quantile.hpp"
#include "dmrisk/risk.hpp"
#include "dmrisk/scalar_opt.hpp"
#include "dmrisk/space.hpp"
