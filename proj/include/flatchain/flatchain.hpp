#pragma once

// Pathwise line integrals of rough curves through mollified-surface Stokes
// assembly, with spectral and scaling diagnostics for stochastic paths.

#include "chain.hpp"
#include "common.hpp"
#include "fbm.hpp"
#include "forms.hpp"
#include "kernel.hpp"
#include "mollify.hpp"
#include "oracle.hpp"
#include "path.hpp"
#include "scaling.hpp"
#include "sheet.hpp"
#include "spectral.hpp"
