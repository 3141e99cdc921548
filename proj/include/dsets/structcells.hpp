#pragma once

#include "dsets/diagset.hpp"

namespace dsets {

// Evidence that a diagram is degenerate: a surjective cartesian projection
// onto a strictly lower-dimensional base through which the labelling factors.
struct DegeneracyWitness {
    Diagram diagram;
    MolMap projection;  // shape(diagram) ->> shape(base)
    Diagram base;
};

bool witness_valid(const DegeneracyWitness& w);

// Labels of base pulled back along a projection onto its shape.
Diagram pullback_labels(const Molecule& total, const MolMap& proj, const Diagram& base);

// The canonical copy of the base inside a cylinder: side copies plus the
// K-part (isomorphic to the base for non-inverted cylinders).
Bitset cyl_copy_subset(const Cylinder& c, Sign side);
// All cylinder elements projecting into a subset of the base.
Bitset cyl_over(const Cylinder& c, const Bitset& base_subset);

// A degenerate structure cell: the diagram with its witness, the cylinder it
// came from, and its declared type (checked at construction for round input).
struct StructCell {
    DegeneracyWitness w;
    Cylinder cyl;
    Diagram source, target;
};

// eps u : u => u
StructCell unit(const Diagram& u);

// lambda_i u : u => eps v #_i u, for a rewritable subdiagram v of the input
// boundary given as a closed subset of shape(u).
StructCell left_unitor(const Diagram& u, const Bitset& vsub);
// rho_i u : u #_i eps v => u, v in the output boundary.
StructCell right_unitor(const Diagram& u, const Bitset& vsub);

// Unitors at codimension > 1; for k = dim u - 1 these coincide with the left
// and right unitors. The declared type is the inductive one and is verified
// against independently built pastings.
StructCell higher_unitor(const Diagram& u, int k, const Bitset& vsub, bool left);

// rev u, independent of the witness chosen.
DegeneracyWitness reverse_witness(const DegeneracyWitness& w);

// zeta u : u # rev u => eps(bd^- u)   (left invertor)
StructCell left_invertor(const DegeneracyWitness& w);
// eta u : eps(bd^+ u) => rev u # u    (right invertor)
StructCell right_invertor(const DegeneracyWitness& w);

}  // namespace dsets
