#pragma once

#include "makbasin/error.hpp"
#include "makbasin/mak.hpp"
#include "makbasin/integrate.hpp"
#include "makbasin/sampling.hpp"
#include "makbasin/snapshots.hpp"
#include "makbasin/dictionary.hpp"
#include "makbasin/edmd.hpp"
#include "makbasin/nelder_mead.hpp"
#include "makbasin/marching_squares.hpp"
#include "makbasin/basin.hpp"
#include "makbasin/bifurcation.hpp"
#include "makbasin/io.hpp"
#include "makbasin/config.hpp"
