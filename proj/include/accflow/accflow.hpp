#pragma once

// Umbrella header: flow fields and composition, occlusion reasoning, the
// two accumulation drivers, the synthetic-scene generator, EPE metrics,
// and file I/O.

#include "accflow/accumulate.hpp"
#include "accflow/core.hpp"
#include "accflow/dataset.hpp"
#include "accflow/experiments.hpp"
#include "accflow/flow_io.hpp"
#include "accflow/image_io.hpp"
#include "accflow/metrics.hpp"
#include "accflow/occlusion.hpp"
#include "accflow/synthgen.hpp"
#include "accflow/types.hpp"
