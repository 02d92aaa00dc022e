#ifndef NMU_NMU_HPP
#define NMU_NMU_HPP

// Umbrella header for the whole toolkit.

#include "nmu/datasets.hpp"
#include "nmu/hals.hpp"
#include "nmu/lnmu.hpp"
#include "nmu/matrix.hpp"
#include "nmu/metrics.hpp"
#include "nmu/oracle.hpp"
#include "nmu/snmf.hpp"

#endif  // NMU_NMU_HPP
