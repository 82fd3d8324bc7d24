#pragma once

#include "hydropseudo/errors.hpp"
#include "hydropseudo/jet.hpp"
#include "hydropseudo/numerics.hpp"
#include "hydropseudo/phi_table.hpp"
#include "hydropseudo/kernels.hpp"
#include "hydropseudo/builder.hpp"
#include "hydropseudo/verifier.hpp"
#include "hydropseudo/sim.hpp"
#include "hydropseudo/spec_document.hpp"
