#pragma once

#include "kerrwig/errors.hpp"
#include "kerrwig/phase_space.hpp"
#include "kerrwig/stencil.hpp"
#include "kerrwig/band_matrix.hpp"
#include "kerrwig/config.hpp"
#include "kerrwig/fokker_planck.hpp"
#include "kerrwig/series.hpp"
#include "kerrwig/analysis.hpp"
#include "kerrwig/io.hpp"
#include "kerrwig/run.hpp"
