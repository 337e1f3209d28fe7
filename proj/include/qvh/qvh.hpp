#pragma once

#include "qvh/error.hpp"
#include "qvh/fidelity.hpp"
#include "qvh/legendre_basis.hpp"
#include "qvh/pde_oracle.hpp"
#include "qvh/protocol.hpp"
#include "qvh/quadrature_algebra.hpp"
