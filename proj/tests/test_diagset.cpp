#include "doctest.h"
#include "presentations.hpp"

using namespace dsets;
using namespace presentations;

TEST_CASE("generators and cells") {
    Simple s = simple();
    CHECK(s.pres->size() == 7);
    Diagram df = s.pres->cell(s.f);
    CHECK(df.dim() == 1);
    CHECK(df.size() == 3);
    CHECK(validate_diagram(df).ok);

    Diagram dal = s.pres->cell(s.al);
    CHECK(dal.dim() == 2);
    CHECK(validate_diagram(dal).ok);
    CHECK(diagram_equal(boundary_diagram(dal, Sign::Minus), s.pres->cell(s.f)));
    CHECK(diagram_equal(boundary_diagram(dal, Sign::Plus), s.pres->cell(s.g)));
}

TEST_CASE("degenerate labelling validates") {
    Simple s = simple();
    // arrow with every element labelled by the 0-generator a
    Diagram d = Diagram::validated(shapes::arrow(), {s.a, s.a, s.a}, s.pres);
    CHECK(d.degenerate_at(2) == (d.shape().poset()->dim_of(2) == 1));
    CHECK(validate_diagram(d).ok);
}

TEST_CASE("boundary mismatch is rejected") {
    Simple s = simple();
    // 2-globe whose top is labelled al but whose edges are both f: the output
    // edge should be g
    Molecule g2 = shapes::globe(2);
    std::vector<int> labels(g2.size());
    for (std::size_t i = 0; i < g2.size(); ++i) {
        int d = g2.poset()->dim_of(static_cast<int>(i));
        labels[i] = d == 0 ? (g2.boundary_set(0, Sign::Minus).get(i) ? s.a : s.b) : (d == 1 ? s.f : s.al);
    }
    Diagram bad = Diagram::trusted(g2, labels, s.pres);
    auto report = validate_diagram(bad);
    CHECK_FALSE(report.ok);
    CHECK(report.first_bad >= 0);
    CHECK_THROWS_AS(Diagram::validated(g2, labels, s.pres), KernelError);
}

TEST_CASE("pasting diagrams") {
    Simple s = simple();
    Diagram fh = comp_fh(s);
    CHECK(fh.size() == 5);
    CHECK(validate_diagram(fh).ok);
    // labels along the path: a, f, b, h, c in poset order of the path
    int count_f = 0, count_h = 0;
    for (std::size_t i = 0; i < fh.size(); ++i) {
        if (fh.label(static_cast<int>(i)) == s.f) ++count_f;
        if (fh.label(static_cast<int>(i)) == s.h) ++count_h;
    }
    CHECK(count_f == 1);
    CHECK(count_h == 1);

    // pasting restricted along the canonical inclusions gives back the factors
    auto dp = paste_diagrams(s.pres->cell(s.f), s.pres->cell(s.h), 0);
    Bitset left_img(dp.whole.size());
    for (int e : dp.incl_left) left_img.set(static_cast<std::size_t>(e));
    CHECK(diagram_equal(restrict_diagram(dp.whole, left_img).diagram, s.pres->cell(s.f)));
    Bitset right_img(dp.whole.size());
    for (int e : dp.incl_right) right_img.set(static_cast<std::size_t>(e));
    CHECK(diagram_equal(restrict_diagram(dp.whole, right_img).diagram, s.pres->cell(s.h)));

    // mismatched labels on the glued region
    CHECK_THROWS_AS(paste_diagrams(s.pres->cell(s.h), s.pres->cell(s.f), 0), KernelError);
}

TEST_CASE("vertical pasting and substitution") {
    Simple s = simple();
    Diagram al = s.pres->cell(s.al);
    // al followed by a unit on g
    StructCell eg = unit(s.pres->cell(s.g));
    auto vert = paste_top(al, eg.w.diagram);
    CHECK(validate_diagram(vert.whole).ok);
    CHECK(diagram_equal(boundary_diagram(vert.whole, Sign::Minus), s.pres->cell(s.f)));
    CHECK(diagram_equal(boundary_diagram(vert.whole, Sign::Plus), s.pres->cell(s.g)));

    // substitute the unit cell back by itself (no-op)
    Bitset sub(vert.whole.size());
    for (int e : vert.incl_right) sub.set(static_cast<std::size_t>(e));
    auto rs = substitute_diagram(vert.whole, eg.w.diagram, sub);
    CHECK(diagram_equal(rs.whole, vert.whole));
    CHECK(validate_diagram(rs.whole).ok);
}

TEST_CASE("parallel and equality") {
    Simple s = simple();
    CHECK(parallel(s.pres->cell(s.f), s.pres->cell(s.g)));
    CHECK_FALSE(parallel(s.pres->cell(s.f), s.pres->cell(s.h)));
    CHECK(diagram_equal(s.pres->cell(s.f), s.pres->cell(s.f)));
    CHECK_FALSE(diagram_equal(s.pres->cell(s.f), s.pres->cell(s.g)));
}

TEST_CASE("presentation morphisms") {
    Simple s = simple();
    // identity morphism
    std::vector<int> idm(s.pres->size());
    for (std::size_t i = 0; i < idm.size(); ++i) idm[i] = static_cast<int>(i);
    auto f = make_morphism(s.pres->self(), s.pres->self(), idm);
    Diagram d = comp_fh(s);
    CHECK(diagram_equal(apply_morphism(f, d), d));

    // swap f and g: boundary-compatible since they are parallel
    std::vector<int> swap = idm;
    swap[static_cast<std::size_t>(s.f)] = s.g;
    swap[static_cast<std::size_t>(s.g)] = s.f;
    // al : f => g cannot map to a generator of type g => f, so this must fail
    CHECK_THROWS_AS(make_morphism(s.pres->self(), s.pres->self(), swap), KernelError);

    // dimension-violating map: send f to a 0-generator
    std::vector<int> bad = idm;
    bad[static_cast<std::size_t>(s.f)] = s.a;
    CHECK_THROWS_AS(make_morphism(s.pres->self(), s.pres->self(), bad), KernelError);

    // morphism commutes with pasting
    auto other = Presentation::create();
    other->add_generator0("x");
    other->add_generator0("y");
    other->add_generator0("z");
    auto px = other->cell(0), py = other->cell(1), pz = other->cell(2);
    other->add_generator("p", px, py);
    other->add_generator("q", px, py);
    other->add_generator("r", py, pz);
    other->add_generator("be", other->cell(3), other->cell(4));
    std::vector<int> to_other(s.pres->size());
    for (std::size_t i = 0; i < to_other.size(); ++i) to_other[i] = static_cast<int>(i);
    auto m = make_morphism(s.pres->self(), PresPtr(other), to_other);
    Diagram lhs = apply_morphism(m, comp_fh(s));
    Diagram rhs = paste_diagrams(apply_morphism(m, s.pres->cell(s.f)), apply_morphism(m, s.pres->cell(s.h)), 0).whole;
    CHECK(diagram_equal(lhs, rhs));
}

TEST_CASE("boundary restriction is hereditary") {
    Simple s = simple();
    Diagram al = s.pres->cell(s.al);
    Diagram in = boundary_diagram(al, Sign::Minus);
    CHECK(validate_diagram(in).ok);
    Diagram v = boundary_diagram(in, 0, Sign::Plus);
    CHECK(validate_diagram(v).ok);
    CHECK(v.size() == 1);
    CHECK(v.label(0) == s.b);
    // boundary at or above the dimension returns the diagram itself
    CHECK(diagram_equal(boundary_diagram(al, 2, Sign::Minus), al));
}
