#pragma once

#include "mfie/basis.hpp"
#include "mfie/config.hpp"
#include "mfie/core.hpp"
#include "mfie/formulations.hpp"
#include "mfie/mesh.hpp"
#include "mfie/mie.hpp"
#include "mfie/operators.hpp"
#include "mfie/postproc.hpp"
#include "mfie/quadrature.hpp"
#include "mfie/rcs.hpp"
#include "mfie/sweep.hpp"
