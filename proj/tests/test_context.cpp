#include "doctest.h"
#include "dsets/context.hpp"
#include "presentations.hpp"

using namespace dsets;
using namespace presentations;

namespace {

// three random-ish 2-diagrams of type f => g to sample context actions
std::vector<Diagram> samples_f_to_g(const Simple& s) {
    Diagram al = s.pres->cell(s.al);
    Diagram eg = unit(s.pres->cell(s.g)).w.diagram;
    Diagram ef = unit(s.pres->cell(s.f)).w.diagram;
    return {al, paste_top(al, eg).whole, paste_top(ef, al).whole};
}

}  // namespace

TEST_CASE("identity and pastings act correctly") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    CtxPtr id = ctx_identity(f, g);
    Diagram al = s.pres->cell(s.al);
    CHECK(diagram_equal(apply_ctx(id, al), al));

    // left paste a unit cell onto the input
    Equiv ef = refl(f);
    CtxPtr lp = ctx_left_paste_whole(ef.d, f, g, ef.cert);
    Diagram got = apply_ctx(lp, al);
    Diagram want = paste_top(ef.d, al).whole;
    CHECK(diagram_equal(got, want));
    CHECK(is_trim(lp));
    CHECK(is_weakly_invertible(lp));
    CHECK(lp->dim == 2);

    Equiv eg2 = refl(g);
    CtxPtr rp = ctx_right_paste_whole(eg2.d, f, g, eg2.cert);
    CHECK(diagram_equal(apply_ctx(rp, al), paste_top(al, eg2.d).whole));

    // composition acts in application order
    CtxPtr both = ctx_compose(ctx_right_paste_whole(eg2.d, lp->cod_v, lp->cod_w, eg2.cert), lp);
    CHECK(diagram_equal(apply_ctx(both, al), paste_top(paste_top(ef.d, al).whole, eg2.d).whole));

    // type errors
    CHECK_THROWS_AS(apply_ctx(lp, s.pres->cell(s.f)), KernelError);
}

TEST_CASE("promotion acts by restriction") {
    Simple s = simple();
    Diagram a = s.pres->cell(s.a), b = s.pres->cell(s.b);
    Equiv ea = refl(a);
    // 1-dimensional context eps a # - on pd(a, b)
    CtxPtr low = ctx_left_paste_whole(ea.d, a, b, ea.cert);
    // promote to 2-diagrams f => g... the pair must live on (a, b)
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    CtxPtr pro = ctx_promote(low, f, g);
    Diagram al = s.pres->cell(s.al);
    Diagram got = apply_ctx(pro, al);
    CHECK(got.dim() == 2);
    // whiskered 2-diagram: same 2-cells, padded input
    CHECK(got.shape().poset()->grade(2).count() == al.shape().poset()->grade(2).count());
    CHECK(diagram_equal(boundary_diagram(got, Sign::Minus), apply_ctx(low, f)));
    CHECK_FALSE(is_trim(pro));
    CHECK(pro->dim == 2);
}

TEST_CASE("context layering reconstructs the action") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    auto samples = samples_f_to_g(s);

    // identity: l_i, r_i are boundary units of the data
    CtxPtr id = ctx_identity(f, g);
    ContextLayering lay = context_layering(id);
    CHECK(lay.l.size() == 2);
    for (const auto& a : samples) CHECK(diagram_equal(apply_layering(lay, a), apply_ctx(id, a)));

    Equiv ef = refl(f);
    CtxPtr lp = ctx_left_paste_whole(ef.d, f, g, ef.cert);
    ContextLayering lay2 = context_layering(lp);
    CHECK(lay2.l[1].dim() == 2);
    CHECK(diagram_equal(lay2.r[1], g));
    for (const auto& a : samples) CHECK(diagram_equal(apply_layering(lay2, a), apply_ctx(lp, a)));

    // composite of a promotion and a trim context
    Equiv ea = refl(s.pres->cell(s.a));
    CtxPtr low = ctx_left_paste_whole(ea.d, s.pres->cell(s.a), s.pres->cell(s.b), ea.cert);
    CtxPtr pro = ctx_promote(low, f, g);
    Equiv epadded = refl(pro->cod_v);
    CtxPtr after = ctx_left_paste_whole(epadded.d, pro->cod_v, pro->cod_w, epadded.cert);
    CtxPtr comp = ctx_compose(after, pro);
    ContextLayering lay3 = context_layering(comp);
    for (const auto& a : samples) CHECK(diagram_equal(apply_layering(lay3, a), apply_ctx(comp, a)));
}

TEST_CASE("context shape and roundness") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    CtxPtr id = ctx_identity(f, g);
    Molecule sh = context_shape(id);
    CHECK(sh.dim() == 2);
    CHECK(find_isomorphism(sh.poset(), shapes::globe(2).poset()).has_value());
    CHECK(is_round_context(id));

    // trim contexts on round pairs are round
    Equiv ef = refl(f);
    CtxPtr lp = ctx_left_paste_whole(ef.d, f, g, ef.cert);
    CHECK(is_round_context(lp));

    // promotion alone is not round (whiskered hole)
    Equiv ea = refl(s.pres->cell(s.a));
    CtxPtr low = ctx_left_paste_whole(ea.d, s.pres->cell(s.a), s.pres->cell(s.b), ea.cert);
    CtxPtr pro = ctx_promote(low, f, g);
    CHECK_FALSE(is_round_context(pro));

    // padding the promotion with a unit rounds it (the introduction's picture)
    CtxPtr rounded = rounded_context(low, {{f, g}});
    CHECK(is_round_context(rounded));
    CHECK(is_weakly_invertible(rounded));
    // R_{v,w} F applied: F_{v,w}(-) # eps(F w)
    Diagram al = s.pres->cell(s.al);
    Diagram expect = paste_top(apply_ctx(pro, al), unit(apply_ctx(low, g)).w.diagram).whole;
    CHECK(diagram_equal(apply_ctx(rounded, al), expect));
}

TEST_CASE("trim factorisation") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    auto samples = samples_f_to_g(s);

    // already trim: (F, identity)
    Equiv ef = refl(f);
    CtxPtr lp = ctx_left_paste_whole(ef.d, f, g, ef.cert);
    TrimFactorisation tf = trim_factorize(lp);
    CHECK(is_trim(tf.trim));
    CHECK(std::holds_alternative<XIdentity>(tf.lower->node));
    for (const auto& a : samples)
        CHECK(diagram_equal(apply_ctx(tf.trim, apply_ctx(tf.lower, a)), apply_ctx(lp, a)));

    // pure promotion: (identity, G)
    Equiv ea = refl(s.pres->cell(s.a));
    CtxPtr low = ctx_left_paste_whole(ea.d, s.pres->cell(s.a), s.pres->cell(s.b), ea.cert);
    CtxPtr pro = ctx_promote(low, f, g);
    TrimFactorisation tf2 = trim_factorize(pro);
    CHECK(std::holds_alternative<XIdentity>(tf2.trim->node));
    CHECK(tf2.lower.get() == low.get());

    // composite: the promoted part commutes past the trim leaves
    Equiv epadded = refl(pro->cod_v);
    CtxPtr after = ctx_left_paste_whole(epadded.d, pro->cod_v, pro->cod_w, epadded.cert);
    CtxPtr comp = ctx_compose(after, pro);
    TrimFactorisation tf3 = trim_factorize(comp);
    CHECK(is_trim(tf3.trim));
    CHECK(is_weakly_invertible(tf3.trim));
    CHECK(is_weakly_invertible(tf3.lower));
    for (const auto& a : samples) {
        Diagram via = apply_ctx(tf3.trim, apply_ctx(tf3.lower, a));
        CHECK(diagram_equal(via, apply_ctx(comp, a)));
    }

    // dimension-1 contexts cannot be factorised
    CHECK_THROWS_AS(trim_factorize(low), KernelError);
}

TEST_CASE("context subdiagrams induce subdiagrams of every application") {
    Simple s = simple();
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    Equiv ef = refl(f);
    ContextSubdiagram cs;
    cs.u_on_left = true;
    cs.u = ef.d;
    cs.rest = ctx_identity(f, g);
    cs.sub = ef.d.shape().all();
    cs.rewritable = true;
    for (const auto& a : samples_f_to_g(s)) {
        Bitset where = context_subdiagram_at(cs, a);
        Diagram fa = apply_ctx(ctx_left_paste_whole(ef.d, f, g, ef.cert), a);
        CHECK(where.count() == ef.d.size());
        SubDiagram part = restrict_diagram(fa, fa.shape().poset()->closure(where));
        CHECK(diagram_equal(part.diagram, ef.d));
    }
}

TEST_CASE("rounded context tower composes") {
    Simple s = simple();
    Diagram a = s.pres->cell(s.a), b = s.pres->cell(s.b);
    Equiv ea = refl(a);
    CtxPtr low = ctx_left_paste_whole(ea.d, a, b, ea.cert);
    Diagram f = s.pres->cell(s.f), g = s.pres->cell(s.g);
    CtxPtr r1 = rounded_context(low, {{f, g}});
    // R_{al, al'} (R_{f,g} F) = R_{al, al'} F for a 3-level chain
    Diagram al = s.pres->cell(s.al);
    Diagram al2 = paste_top(s.pres->cell(s.al), unit(g).w.diagram).whole;
    CtxPtr r2a = rounded_context(low, {{f, g}, {al, al2}});
    CtxPtr r2b = rounded_context(r1, {{al, al2}});
    CHECK(r2a->dim == 3);
    // a 3-diagram of type al => al2: the reversed right unitor of al at g
    Diagram sample = reverse_witness(right_unitor(al, al.shape().boundary_set(Sign::Plus)).w).diagram;
    REQUIRE(diagram_equal(boundary_diagram(sample, Sign::Minus), al));
    REQUIRE(diagram_equal(boundary_diagram(sample, Sign::Plus), al2));
    CHECK(contexts_agree_on(r2a, r2b, {sample}));
    CHECK(is_round_context(r2a));
}
