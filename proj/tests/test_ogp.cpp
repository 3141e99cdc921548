#include "doctest.h"
#include "dsets/molecule.hpp"
#include "shapes.hpp"

using namespace dsets;
using namespace shapes;

TEST_CASE("closure basics") {
    Molecule a = arrow();
    const auto& p = *a.poset();
    // the single edge
    int edge = -1;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p.dim_of(static_cast<int>(i)) == 1) edge = static_cast<int>(i);
    Bitset s(p.size());
    s.set(static_cast<std::size_t>(edge));
    CHECK(p.closure(s).count() == 3);

    Bitset empty(p.size());
    CHECK(p.closure(empty).none());

    Molecule g = globe(2);
    Bitset top(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.poset()->dim_of(static_cast<int>(i)) == 2) top.set(i);
    // oracle: enumerate covering chains
    auto got = to_set(g.poset()->closure(top));
    auto want = oracle_closure(*g.poset(), to_set(top));
    CHECK(got == want);
    CHECK(got.size() == 5);
}

TEST_CASE("boundary formula on small shapes") {
    Molecule a = arrow();
    Bitset bm = a.boundary_set(0, Sign::Minus);
    CHECK(bm.count() == 1);
    CHECK(a.poset()->dim_of(bm.to_vector()[0]) == 0);

    Molecule pt = point();
    for (int n = 0; n < 3; ++n) {
        CHECK(pt.poset()->boundary(pt.all(), n, Sign::Minus) == pt.all());
        CHECK(pt.poset()->boundary(pt.all(), n, Sign::Plus) == pt.all());
    }

    Molecule two = path(2);
    Bitset out = two.boundary_set(0, Sign::Plus);
    CHECK(out.count() == 1);
    // matches the literal formula
    CHECK(to_set(out) == oracle_boundary(*two.poset(), to_set(two.all()), 0, Sign::Plus));
    // the final vertex has an edge coface with it as output face only
    int v = out.to_vector()[0];
    CHECK(two.poset()->cofaces(v, Sign::Minus).empty());
}

TEST_CASE("boundary agrees with oracle on random molecules") {
    MoleculeGen gen(7);
    for (int t = 0; t < 12; ++t) {
        Molecule m = gen.molecule(1 + t % 3);
        auto u = to_set(m.all());
        for (int n = -1; n <= m.dim(); ++n)
            for (int a = 0; a < 2; ++a) {
                auto got = to_set(m.poset()->boundary(m.all(), n, static_cast<Sign>(a)));
                auto want = oracle_boundary(*m.poset(), u, n, static_cast<Sign>(a));
                REQUIRE(got == want);
            }
    }
}

TEST_CASE("globularity and roundness") {
    CHECK(globe(2).is_round());
    CHECK(path(2).is_round());
    // whiskered globe: boundary intersection goes beyond the 0-boundary
    Molecule g = globe(2);
    Bitset outv = g.boundary_set(0, Sign::Plus);
    std::vector<int> iota(g.size(), -1);
    Molecule a = arrow();
    Bitset src = a.boundary_set(0, Sign::Minus);
    iota[static_cast<std::size_t>(outv.to_vector()[0])] = src.to_vector()[0];
    Molecule whisk = paste_at_submolecule(g, a, 0, iota, true).whole;
    CHECK(whisk.size() == 7);
    CHECK_FALSE(whisk.is_round());
    CHECK(whisk.poset()->is_globular(whisk.all()));
}

TEST_CASE("boundaries of boundaries collapse") {
    MoleculeGen gen(11);
    for (int t = 0; t < 10; ++t) {
        Molecule m = gen.molecule(1 + t % 3);
        for (int n = 1; n <= m.dim(); ++n)
            for (int b = 0; b < 2; ++b) {
                Bitset bn = m.poset()->boundary(m.all(), n, static_cast<Sign>(b));
                for (int k = 0; k < n; ++k)
                    for (int a = 0; a < 2; ++a)
                        REQUIRE(m.poset()->boundary(bn, k, static_cast<Sign>(a)) ==
                                m.boundary_set(k, static_cast<Sign>(a)));
            }
    }
}

TEST_CASE("dual is an involution") {
    Molecule g = globe(2);
    auto d = dual(g.poset(), {1});
    CHECK(d->structure_key() != g.poset()->structure_key());
    CHECK(dual(d, {1})->structure_key() == g.poset()->structure_key());

    // top dual swaps the input/output edges of the globe
    auto dt = dual_top(g.poset());
    int top = -1;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.poset()->dim_of(static_cast<int>(i)) == 2) top = static_cast<int>(i);
    CHECK(dt->faces(top, Sign::Minus) == g.poset()->faces(top, Sign::Plus));
    CHECK(dt->faces(top, Sign::Plus) == g.poset()->faces(top, Sign::Minus));
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (static_cast<int>(i) == top) continue;
        CHECK(dt->faces(static_cast<int>(i), Sign::Minus) == g.poset()->faces(static_cast<int>(i), Sign::Minus));
    }
}

TEST_CASE("maps: identity and collapse") {
    Molecule a = arrow();
    MolMap id = identity_map(a.poset());
    CHECK(check_map(id));
    CHECK(check_cartesian(id));

    Molecule pt = point();
    MolMap collapse{a.poset(), pt.poset(), std::vector<int>(a.size(), 0)};
    CHECK(check_map(collapse));
    CHECK(check_cartesian(collapse));

    // a non-map: send the edge of the arrow to a vertex of the 2-path while
    // separating its endpoints
    Molecule two = path(2);
    std::vector<int> bad(a.size(), 0);
    int mid = -1;
    {
        Bitset b = two.boundary_set(0, Sign::Plus);
        Bitset m0 = two.poset()->boundary(two.all(), 0, Sign::Minus);
        for (std::size_t i = 0; i < two.size(); ++i)
            if (two.poset()->dim_of(static_cast<int>(i)) == 0 && !b.get(i) && !m0.get(i)) mid = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < a.size(); ++i) bad[i] = mid;
    {
        Bitset bm = a.boundary_set(0, Sign::Minus);
        bad[static_cast<std::size_t>(bm.to_vector()[0])] = two.boundary_set(0, Sign::Minus).to_vector()[0];
    }
    MolMap wrong{a.poset(), two.poset(), bad};
    CHECK_FALSE(check_map(wrong));
}

TEST_CASE("isomorphism search and rigidity") {
    CHECK(find_isomorphism(arrow().poset(), arrow().poset()).has_value());
    CHECK_FALSE(find_isomorphism(arrow().poset(), point().poset()).has_value());

    Molecule u = path(3);
    CHECK(count_automorphisms(u.poset()) == 1);

    // cylinder with K = U is isomorphic to U
    Molecule g = globe(2);
    Cylinder c = partial_gray_cylinder(g, g.all());
    auto iso = find_isomorphism(c.cyl.poset(), g.poset());
    REQUIRE(iso.has_value());
    CHECK(is_dim_preserving(*iso));
    CHECK(count_automorphisms(g.poset()) == 1);
}

TEST_CASE("interior and closed subsets") {
    Molecule g = globe(2);
    Bitset in = g.poset()->interior(g.all());
    CHECK(in.count() == 1);
    CHECK(g.poset()->dim_of(in.to_vector()[0]) == 2);
    CHECK_FALSE(g.poset()->is_closed(in));
    CHECK(g.poset()->is_closed(g.boundary_set(Sign::Minus)));
}
