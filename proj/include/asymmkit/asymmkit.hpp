#pragma once

// Convenience umbrella: pulls in the whole library.

#include "asymmkit/arch.hpp"
#include "asymmkit/blocks.hpp"
#include "asymmkit/cost.hpp"
#include "asymmkit/data.hpp"
#include "asymmkit/layers.hpp"
#include "asymmkit/ops.hpp"
#include "asymmkit/params.hpp"
#include "asymmkit/rng.hpp"
#include "asymmkit/tensor.hpp"
#include "asymmkit/threading.hpp"
#include "asymmkit/train.hpp"
#include "asymmkit/weights.hpp"
