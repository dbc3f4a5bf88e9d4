#pragma once

// Umbrella header.

#include "cocontact/dual.hpp"
#include "cocontact/dynamics.hpp"
#include "cocontact/expression.hpp"
#include "cocontact/geometry.hpp"
#include "cocontact/hamilton_jacobi.hpp"
#include "cocontact/io.hpp"
#include "cocontact/ode.hpp"
#include "cocontact/phase_space.hpp"
#include "cocontact/quadrature.hpp"
#include "cocontact/quantities.hpp"
#include "cocontact/sampling.hpp"
#include "cocontact/scalar_field.hpp"
#include "cocontact/smooth_map.hpp"
#include "cocontact/systems.hpp"
