#pragma once

// Umbrella header: the full Grid-Guard library.

#include "gridguard/audit.hpp"
#include "gridguard/bytes.hpp"
#include "gridguard/compliance.hpp"
#include "gridguard/config.hpp"
#include "gridguard/crypto.hpp"
#include "gridguard/datafactory.hpp"
#include "gridguard/errors.hpp"
#include "gridguard/fpe.hpp"
#include "gridguard/governance.hpp"
#include "gridguard/gridsim.hpp"
#include "gridguard/histogram.hpp"
#include "gridguard/identity.hpp"
#include "gridguard/scenario.hpp"
#include "gridguard/sealing.hpp"
#include "gridguard/supplychain.hpp"
