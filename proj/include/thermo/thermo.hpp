#pragma once

#include "thermo/classifier.hpp"
#include "thermo/core.hpp"
#include "thermo/edge_filter.hpp"
#include "thermo/features.hpp"
#include "thermo/geometry.hpp"
#include "thermo/io.hpp"
#include "thermo/pipeline.hpp"
#include "thermo/registration.hpp"
#include "thermo/roi.hpp"
#include "thermo/synth.hpp"

namespace thermo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace thermo
