#include "doctest.h"
#include "presentations.hpp"

using namespace dsets;
using namespace presentations;

TEST_CASE("units") {
    Simple s = simple();
    // unit on a 0-cell: an arrow with every label a
    StructCell ea = unit(s.pres->cell(s.a));
    CHECK(ea.w.diagram.dim() == 1);
    CHECK(ea.w.diagram.size() == 3);
    for (std::size_t i = 0; i < ea.w.diagram.size(); ++i) CHECK(ea.w.diagram.label(static_cast<int>(i)) == s.a);
    CHECK(witness_valid(ea.w));

    // unit on a 1-cell: 2-globe labelled f on both 1-faces
    StructCell ef = unit(s.pres->cell(s.f));
    CHECK(ef.w.diagram.size() == 5);
    CHECK(diagram_equal(boundary_diagram(ef.w.diagram, Sign::Minus), s.pres->cell(s.f)));
    CHECK(diagram_equal(boundary_diagram(ef.w.diagram, Sign::Plus), s.pres->cell(s.f)));
    CHECK(witness_valid(ef.w));
    CHECK(validate_diagram(ef.w.diagram).ok);

    // units on composites
    StructCell efh = unit(comp_fh(s));
    CHECK(efh.w.diagram.round());
    CHECK(diagram_equal(efh.source, comp_fh(s)));
}

TEST_CASE("left unitor on a 1-cell") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f);
    Bitset va = f.shape().boundary_set(0, Sign::Minus);
    StructCell lam = left_unitor(f, va);
    CHECK(lam.w.diagram.size() == 7);
    CHECK(lam.w.diagram.dim() == 2);
    CHECK(diagram_equal(lam.source, f));
    // target: eps a # f
    StructCell ea = unit(restrict_diagram(f, va).diagram);
    Diagram expect = paste_diagrams(ea.w.diagram, f, 0).whole;
    CHECK(diagram_equal(lam.target, expect));
    CHECK(witness_valid(lam.w));
    CHECK(validate_diagram(lam.w.diagram).ok);

    // iota an isomorphism onto the whole input: full unit padding
    StructCell lam_full = left_unitor(f, f.shape().boundary_set(Sign::Minus));
    CHECK(diagram_equal(lam_full.source, f));
    CHECK(lam_full.w.diagram.round());
}

TEST_CASE("right unitor uses the output boundary") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f);
    Bitset vb = f.shape().boundary_set(0, Sign::Plus);
    StructCell rho = right_unitor(f, vb);
    CHECK(diagram_equal(rho.target, f));
    StructCell eb = unit(restrict_diagram(f, vb).diagram);
    Diagram expect = paste_diagrams(f, eb.w.diagram, 0).whole;
    CHECK(diagram_equal(rho.source, expect));

    // a subset of the input boundary is rejected
    CHECK_THROWS_AS(right_unitor(f, f.shape().boundary_set(0, Sign::Minus)), KernelError);
}

TEST_CASE("higher unitor at codimension 2") {
    Simple s = simple();
    Diagram al = s.pres->cell(s.al);
    Bitset va = al.shape().boundary_set(0, Sign::Minus);
    StructCell hu = higher_unitor(al, 0, va, true);
    CHECK(hu.w.diagram.dim() == 3);
    CHECK(witness_valid(hu.w));
    CHECK(validate_diagram(hu.w.diagram).ok);
    // reduces to the left unitor at k = dim - 1
    StructCell lu = higher_unitor(al, 1, al.shape().boundary_set(Sign::Minus), true);
    CHECK(diagram_equal(lu.source, al));
}

TEST_CASE("reverse") {
    Simple s = simple();
    StructCell ef = unit(s.pres->cell(s.f));
    DegeneracyWitness r = reverse_witness(ef.w);
    CHECK(witness_valid(r));
    // reverse of a unit is the unit up to the canonical iso
    CHECK(diagram_equal(r.diagram, ef.w.diagram));
    // double reverse is the identity on the nose
    DegeneracyWitness rr = reverse_witness(r);
    CHECK(rr.diagram.shape().poset()->structure_key() == ef.w.diagram.shape().poset()->structure_key());
    CHECK(rr.diagram.labels() == ef.w.diagram.labels());

    // reverse of a left unitor swaps the type
    Diagram f = s.pres->cell(s.f);
    StructCell lam = left_unitor(f, f.shape().boundary_set(0, Sign::Minus));
    DegeneracyWitness rl = reverse_witness(lam.w);
    CHECK(witness_valid(rl));
    CHECK(diagram_equal(boundary_diagram(rl.diagram, Sign::Minus), lam.target));
    CHECK(diagram_equal(boundary_diagram(rl.diagram, Sign::Plus), lam.source));
}

TEST_CASE("reverse is independent of the witness") {
    Simple s = simple();
    // eps(eps a) admits two witnesses: tau onto eps a, and tau . tau onto a
    StructCell ea = unit(s.pres->cell(s.a));
    StructCell eea = unit(ea.w.diagram);
    DegeneracyWitness w1 = eea.w;
    DegeneracyWitness w2{eea.w.diagram, compose(ea.w.projection, eea.w.projection), s.pres->cell(s.a)};
    CHECK(witness_valid(w1));
    CHECK(witness_valid(w2));
    Diagram r1 = reverse_witness(w1).diagram;
    Diagram r2 = reverse_witness(w2).diagram;
    CHECK(r1.shape().poset()->structure_key() == r2.shape().poset()->structure_key());
    CHECK(r1.labels() == r2.labels());
}

TEST_CASE("invertors") {
    Simple s = simple();
    // zeta on the unit of a 0-cell: type eps a # eps a => eps a, all labels a
    StructCell ea = unit(s.pres->cell(s.a));
    StructCell z = left_invertor(ea.w);
    CHECK(z.w.diagram.dim() == 2);
    for (std::size_t i = 0; i < z.w.diagram.size(); ++i) CHECK(z.w.diagram.label(static_cast<int>(i)) == s.a);
    Diagram expect_src = paste_top(ea.w.diagram, reverse_witness(ea.w).diagram).whole;
    CHECK(diagram_equal(boundary_diagram(z.w.diagram, Sign::Minus), expect_src));
    CHECK(witness_valid(z.w));
    CHECK(validate_diagram(z.w.diagram).ok);

    StructCell h = right_invertor(ea.w);
    CHECK(diagram_equal(boundary_diagram(h.w.diagram, Sign::Minus), unit(boundary_diagram(ea.w.diagram, Sign::Plus)).w.diagram));
    CHECK(witness_valid(h.w));

    // zeta on a left unitor of a 1-cell is a 3-diagram with the declared type
    Diagram f = s.pres->cell(s.f);
    StructCell lam = left_unitor(f, f.shape().boundary_set(0, Sign::Minus));
    StructCell z3 = left_invertor(lam.w);
    CHECK(z3.w.diagram.dim() == 3);
    CHECK(z3.w.diagram.round());
    CHECK(witness_valid(z3.w));
    Diagram src = paste_top(lam.w.diagram, reverse_witness(lam.w).diagram).whole;
    CHECK(diagram_equal(z3.source, src));
    CHECK(diagram_equal(z3.target, unit(lam.source).w.diagram));
}

TEST_CASE("structure cells commute with morphisms") {
    Simple s = simple();
    std::vector<int> idm(s.pres->size());
    for (std::size_t i = 0; i < idm.size(); ++i) idm[i] = static_cast<int>(i);
    auto m = make_morphism(s.pres->self(), s.pres->self(), idm);

    Diagram fh = comp_fh(s);
    CHECK(diagram_equal(apply_morphism(m, unit(fh).w.diagram), unit(apply_morphism(m, fh)).w.diagram));
    Bitset va = fh.shape().boundary_set(0, Sign::Minus);
    CHECK(diagram_equal(apply_morphism(m, left_unitor(fh, va).w.diagram),
                        left_unitor(apply_morphism(m, fh), va).w.diagram));
}
