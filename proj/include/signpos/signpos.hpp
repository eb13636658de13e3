#pragma once

#include "signpos/analysis.hpp"
#include "signpos/eigensolver.hpp"
#include "signpos/errors.hpp"
#include "signpos/hamiltonian_ir.hpp"
#include "signpos/io.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/protocols.hpp"
#include "signpos/rotation.hpp"
#include "signpos/search.hpp"
#include "signpos/state_vector.hpp"
