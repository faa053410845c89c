#pragma once

#include "entrywise/config.hpp"
#include "entrywise/csv.hpp"
#include "entrywise/diagnostics.hpp"
#include "entrywise/embedding.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/io.hpp"
#include "entrywise/lp_test.hpp"
#include "entrywise/mc_harness.hpp"
#include "entrywise/membership.hpp"
#include "entrywise/model.hpp"
#include "entrywise/rng.hpp"
#include "entrywise/spectral_core.hpp"
#include "entrywise/stats.hpp"
#include "entrywise/types.hpp"

namespace entrywise {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace entrywise
