#pragma once

#include "hsflow/random_maps.hpp"

namespace hsflow::testing {
using sampling::random_map;
}
