#pragma once

#include "kiv/bootstrap.hpp"
#include "kiv/coverage.hpp"
#include "kiv/dgp.hpp"
#include "kiv/diagnostics.hpp"
#include "kiv/estimator.hpp"
#include "kiv/features.hpp"
#include "kiv/io.hpp"
#include "kiv/kernels.hpp"
#include "kiv/linalg.hpp"
#include "kiv/rng.hpp"
