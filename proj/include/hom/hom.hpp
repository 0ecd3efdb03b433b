#pragma once

#include "hom/numerics.hpp"
#include "hom/spectra.hpp"
#include "hom/wigner.hpp"
#include "hom/metrology.hpp"
#include "hom/estimation.hpp"
