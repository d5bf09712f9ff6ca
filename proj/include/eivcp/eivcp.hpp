#pragma once

// Umbrella header.

#include "eivcp/errors.hpp"
#include "eivcp/linalg.hpp"
#include "eivcp/rng.hpp"
#include "eivcp/parallel.hpp"
#include "eivcp/model.hpp"
#include "eivcp/spectral.hpp"
#include "eivcp/detect.hpp"
#include "eivcp/limit_sim.hpp"
#include "eivcp/datagen.hpp"
#include "eivcp/diagnostics.hpp"
#include "eivcp/io.hpp"
#include "eivcp/harness.hpp"
