#pragma once

// Umbrella header for the ring belief-propagation MIMO detection toolkit.

#include "ringbp/alphabet.hpp"
#include "ringbp/channel.hpp"
#include "ringbp/convergence.hpp"
#include "ringbp/density_evolution.hpp"
#include "ringbp/detector.hpp"
#include "ringbp/errors.hpp"
#include "ringbp/experiment.hpp"
#include "ringbp/linalg.hpp"
#include "ringbp/parallel.hpp"
#include "ringbp/quadrature.hpp"
#include "ringbp/rng.hpp"
#include "ringbp/truncated_link.hpp"
