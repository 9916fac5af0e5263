#pragma once

#include "jinv/continuum.hpp"
#include "jinv/error.hpp"
#include "jinv/gl_inversion.hpp"
#include "jinv/grid.hpp"
#include "jinv/recovery.hpp"
#include "jinv/spectral.hpp"
#include "jinv/tridiagonal_eigen.hpp"
