#pragma once

#include "contopt/contact.hpp"

namespace contopt {

// Unit square on the half-plane y >= 0 with zero gap: rollers on the vertical
// sides, pressure q on top, frictionless. Exact solution: u_x = 0,
// u_y = -q/rho - q*y/(lambda + 2 mu) for the penalty method.
ContactProblem uniaxial_patch(int n, double q, double rho);

// Unit square pressed by q and sheared by p on top, left side on rollers,
// Tresca friction on the bottom.
ContactProblem tresca_block(int n, double p, double q);

}  // namespace contopt
