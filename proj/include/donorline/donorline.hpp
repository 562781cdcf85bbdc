#pragma once

#include "donorline/absorption.hpp"
#include "donorline/carrier_states.hpp"
#include "donorline/error.hpp"
#include "donorline/io.hpp"
#include "donorline/isotope_broadening.hpp"
#include "donorline/lattice.hpp"
#include "donorline/least_squares.hpp"
#include "donorline/lineshape.hpp"
#include "donorline/minimize.hpp"
#include "donorline/pipeline.hpp"
#include "donorline/registry.hpp"
#include "donorline/rng.hpp"
#include "donorline/spectrum.hpp"
#include "donorline/spin_structure.hpp"
#include "donorline/thermal.hpp"
#include "donorline/units.hpp"
