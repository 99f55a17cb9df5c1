// Analytic initial conditions and their projection onto the discretely
// divergence-free subspace of the face space.
#pragma once

#include <variant>

#include "mfrelax/derham.hpp"

namespace mfrelax {

struct HopfParams {
  double omega1 = 3.0;
  double omega2 = 2.0;
  double s = 1.0;
};

struct IsoHelix {};

using ICKind = std::variant<HopfParams, IsoHelix>;

/// Hopf fibration field with winding numbers (omega1, omega2) and scale s.
VectorField hopf_field(const HopfParams& p);
/// Twisted uniform field (alpha y, -alpha x, 1), alpha = (pi/2) z exp(-r^2/2 - z^2/4).
VectorField isohelix_field();
VectorField initial_field(const ICKind& ic);

struct Projection {
  FieldVec B;  // face space, discretely divergence-free
  FieldVec p;  // cell space, zero mean
};

/// M_face-orthogonal projection onto ker(div): the saddle system
///   (B, C) - (p, div C) = (raw, C),  (q, div B) = 0,  sum(p) = 0
/// solved monolithically with a scalar mean-zero multiplier.
Projection project_divfree(const DeRhamComplex& complex, const FieldVec& raw);

}  // namespace mfrelax
