#include "dsets/natcalc.hpp"

#include <algorithm>

namespace dsets {

namespace {

NatPtr mk_nat(NatExpr e) { return std::make_shared<NatExpr>(std::move(e)); }

// Translate a closed subset of the pair diagram v into the matching boundary
// of an index diagram a through the canonical identification.
std::vector<int> pair_into_index(const Diagram& pair_diag, const Diagram& a, int level, Sign side) {
    Bitset bda = a.shape().boundary_set(level, side);
    SubDiagram sd = restrict_diagram(a, bda);
    auto iso = find_isomorphism(pair_diag.shape().poset(), sd.diagram.shape().poset());
    require(iso.has_value(), Err::TypeMismatch, "index diagram is not typed over the family pair");
    std::vector<int> out(pair_diag.size());
    for (std::size_t x = 0; x < pair_diag.size(); ++x) {
        require(pair_diag.label(static_cast<int>(x)) == sd.diagram.label(iso->assign[x]), Err::TypeMismatch,
                "index diagram labels do not match the family pair");
        out[x] = sd.old_of_new[static_cast<std::size_t>(iso->assign[x])];
    }
    return out;
}

Bitset translate_subset(const Diagram& pair_diag, const Diagram& a, int level, Sign side, const Bitset& vsub) {
    auto map = pair_into_index(pair_diag, a, level, side);
    Bitset out(a.size());
    for (int x : vsub.to_vector()) out.set(static_cast<std::size_t>(map[static_cast<std::size_t>(x)]));
    return out;
}

// Left/right pasting context along the whole boundary, from a certified
// equivalence leaf.
CtxPtr lp_whole(const RichEquiv& e, const Diagram& v, const Diagram& w) {
    return ctx_left_paste_whole(e.d(), v, w, e.cert());
}
CtxPtr rp_whole(const RichEquiv& e, const Diagram& v, const Diagram& w) {
    return ctx_right_paste_whole(e.d(), v, w, e.cert());
}

const XLeftPaste* as_lp(const CtxPtr& f) { return std::get_if<XLeftPaste>(&f->node); }
const XRightPaste* as_rp(const CtxPtr& f) { return std::get_if<XRightPaste>(&f->node); }

}  // namespace

// --- constructors ----------------------------------------------------------------

NatPtr nat_refl(const CtxPtr& src, const CtxPtr& tgt) {
    NatExpr e;
    e.node = NUnitFamily{};
    e.src = src;
    e.tgt = tgt;
    e.v = src->v;
    e.w = src->w;
    return mk_nat(std::move(e));
}

NatPtr nat_unit_family(const Diagram& v, const Diagram& w) {
    CtxPtr id = ctx_identity(v, w);
    return nat_refl(id, id);
}

NatPtr nat_left_unitor(const Diagram& v, const Diagram& w, const Bitset& vsub) {
    SubDiagram u = restrict_diagram(v, v.shape().poset()->closure(vsub));
    StructCell eps = unit(u.diagram);
    std::vector<int> iota(eps.w.diagram.size(), -1);
    Bitset cap = eps.w.diagram.shape().boundary_set(Sign::Plus);
    for (std::size_t t = 0; t < eps.w.diagram.size(); ++t)
        if (cap.get(t)) iota[t] = u.old_of_new[static_cast<std::size_t>(eps.cyl.tau.assign[t])];
    NatExpr e;
    e.node = NLeftUnitorFamily{v.shape().poset()->closure(vsub)};
    e.src = ctx_identity(v, w);
    e.tgt = ctx_left_paste(eps.w.diagram, iota, v, w, cert_degeneracy(eps.w));
    e.v = v;
    e.w = w;
    return mk_nat(std::move(e));
}

NatPtr nat_right_unitor(const Diagram& v, const Diagram& w, const Bitset& vsub) {
    SubDiagram u = restrict_diagram(w, w.shape().poset()->closure(vsub));
    StructCell eps = unit(u.diagram);
    std::vector<int> iota(eps.w.diagram.size(), -1);
    Bitset cap = eps.w.diagram.shape().boundary_set(Sign::Minus);
    for (std::size_t t = 0; t < eps.w.diagram.size(); ++t)
        if (cap.get(t)) iota[t] = u.old_of_new[static_cast<std::size_t>(eps.cyl.tau.assign[t])];
    NatExpr e;
    e.node = NRightUnitorFamily{w.shape().poset()->closure(vsub)};
    e.src = ctx_right_paste(eps.w.diagram, iota, v, w, cert_degeneracy(eps.w));
    e.tgt = ctx_identity(v, w);
    e.v = v;
    e.w = w;
    return mk_nat(std::move(e));
}

NatPtr nat_higher_unitor(const Diagram& v, const Diagram& w, int k, const Bitset& vsub, bool left) {
    require(k >= 0 && k <= v.dim(), Err::BadCodimension, "higher unitor family: k out of range");
    if (k == v.dim()) return left ? nat_left_unitor(v, w, vsub) : nat_right_unitor(v, w, vsub);
    SubDiagram vks = restrict_diagram(v, v.shape().boundary_set(k, left ? Sign::Minus : Sign::Plus));
    Bitset in_vk(vks.diagram.size());
    for (int x : vsub.to_vector()) {
        int t2 = vks.new_of_old[static_cast<std::size_t>(x)];
        require(t2 >= 0, Err::BadCodimension, "higher unitor anchor must lie at the stated level");
        in_vk.set(static_cast<std::size_t>(t2));
    }
    Bitset vsub_w = translate_subset(vks.diagram, w, k, left ? Sign::Minus : Sign::Plus, in_vk);
    StructCell hu_w = higher_unitor(w, k, vsub_w, left);
    StructCell hu_v = higher_unitor(v, k, vsub, left);
    // anchors: the minus copy of w inside hu_w, the plus copy of v inside hu_v
    std::vector<int> anchor_w(w.size()), anchor_v(v.size());
    for (std::size_t x = 0; x < w.size(); ++x) {
        int t = hu_w.cyl.at_k[x];
        if (t < 0) t = hu_w.cyl.copies[x][0];
        anchor_w[x] = t;
    }
    for (std::size_t x = 0; x < v.size(); ++x) {
        int t = hu_v.cyl.at_k[x];
        if (t < 0) t = hu_v.cyl.copies[x][1];
        anchor_v[x] = t;
    }
    NatExpr e;
    e.node = NHigherUnitorFamily{k, v.shape().poset()->closure(vsub), left};
    e.src = ctx_right_wrap(hu_w.w.diagram, anchor_w, v, w, cert_degeneracy(hu_w.w));
    e.tgt = ctx_left_wrap(hu_v.w.diagram, anchor_v, v, w, cert_degeneracy(hu_v.w));
    e.v = v;
    e.w = w;
    return mk_nat(std::move(e));
}

NatPtr nat_pushforward(const CtxPtr& base, const ContextSubdiagram& cs, const RichEquiv& h) {
    require(cs.rewritable, Err::NotRewritable, "pushforward needs a rewritable context subdiagram");
    NatExpr e;
    Diagram z_new = boundary_diagram(h.d(), Sign::Plus);
    e.node = NPushforward{base, cs, h};
    e.src = base;
    e.tgt = ctx_subst_at(base, cs, z_new);
    e.v = base->v;
    e.w = base->w;
    return mk_nat(std::move(e));
}

NatPtr nat_compose(const NatPtr& a, const NatPtr& b) {
    NatExpr e;
    e.node = NComposeNat{a, b};
    e.src = a->src;
    e.tgt = b->tgt;
    e.v = a->v;
    e.w = a->w;
    return mk_nat(std::move(e));
}

NatPtr nat_left_ctx(const CtxPtr& h, const NatPtr& t) {
    NatExpr e;
    e.node = NLeftCtx{h, t};
    e.src = ctx_compose(h, t->src);
    e.tgt = ctx_compose(h, t->tgt);
    e.v = t->v;
    e.w = t->w;
    return mk_nat(std::move(e));
}

NatPtr nat_right_ctx(const NatPtr& t, const CtxPtr& h) {
    NatExpr e;
    e.node = NRightCtx{t, h};
    e.src = ctx_compose(t->src, h);
    e.tgt = ctx_compose(t->tgt, h);
    e.v = h->v;
    e.w = h->w;
    return mk_nat(std::move(e));
}

NatPtr nat_weak_inv(const NatPtr& t) {
    NatExpr e;
    e.node = NWeakInv{t};
    e.src = t->tgt;
    e.tgt = t->src;
    e.v = t->v;
    e.w = t->w;
    return mk_nat(std::move(e));
}

// --- components ---------------------------------------------------------------------

RichEquiv nat_component(const NatPtr& t, const Diagram& a) {
    require(a.valid() && a.dim() == t->v.dim() + 1, Err::TypeMismatch,
            "components are indexed one dimension above the pair");
    RichEquiv out = std::visit(
        [&](const auto& n) -> RichEquiv {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NUnitFamily>) {
                return rich_refl(apply_ctx(t->src, a));
            } else if constexpr (std::is_same_v<T, NLeftUnitorFamily>) {
                Bitset pos = translate_subset(t->v, a, t->v.dim(), Sign::Minus, n.vsub);
                return rich_degenerate(left_unitor(a, pos).w);
            } else if constexpr (std::is_same_v<T, NRightUnitorFamily>) {
                Bitset pos = translate_subset(t->w, a, t->w.dim(), Sign::Plus, n.vsub);
                return rich_degenerate(right_unitor(a, pos).w);
            } else if constexpr (std::is_same_v<T, NHigherUnitorFamily>) {
                SubDiagram vks = restrict_diagram(t->v, t->v.shape().boundary_set(n.k, n.left ? Sign::Minus : Sign::Plus));
                Bitset in_vk(vks.diagram.size());
                for (int x : n.vsub.to_vector()) {
                    int t2 = vks.new_of_old[static_cast<std::size_t>(x)];
                    require(t2 >= 0, Err::Internal, "higher unitor anchor escaped its level");
                    in_vk.set(static_cast<std::size_t>(t2));
                }
                Bitset pos = translate_subset(vks.diagram, a, n.k, n.left ? Sign::Minus : Sign::Plus, in_vk);
                return rich_degenerate(higher_unitor(a, n.k, pos, n.left).w);
            } else if constexpr (std::is_same_v<T, NPushforward>) {
                CtxApply fa = apply_context(n.base, a);
                Bitset pos = context_subdiagram_at(n.cs, a);
                // positions computed against the cs pasting instance; carry
                // them to the base application by the unique isomorphism
                Diagram cs_whole = apply_context_subdiagram(n.cs, a).result;
                Bitset pos_fa = pos;
                if (!diagram_equal(cs_whole, fa.result) ||
                    cs_whole.shape().poset()->structure_key() != fa.result.shape().poset()->structure_key()) {
                    auto iso = find_isomorphism(cs_whole.shape().poset(), fa.result.shape().poset());
                    require(iso.has_value(), Err::Internal, "pushforward decomposition out of sync");
                    Bitset moved(fa.result.size());
                    for (int x : pos.to_vector()) moved.set(static_cast<std::size_t>(iso->assign[x]));
                    pos_fa = moved;
                }
                return rich_subdiag(fa.result, pos_fa, n.h);
            } else if constexpr (std::is_same_v<T, NComposeNat>) {
                return rich_trans(nat_component(n.a, a), nat_component(n.b, a));
            } else if constexpr (std::is_same_v<T, NLeftCtx>) {
                RichEquiv inner = nat_component(n.t, a);
                RichEquiv moved = context_apply_rich(n.h, inner);
                Diagram hga = apply_ctx(n.h, apply_ctx(n.t->tgt, a));
                return rich_trans(moved, rich_refl(hga));
            } else if constexpr (std::is_same_v<T, NRightCtx>) {
                return nat_component(n.t, apply_ctx(n.h, a));
            } else if constexpr (std::is_same_v<T, NWeakInv>) {
                return rich_sym(nat_component(n.t, a));
            } else {  // NDerived
                return nat_component(n.payload, a);
            }
        },
        t->node);
    require(diagram_equal(boundary_diagram(out.d(), Sign::Minus), apply_ctx(t->src, a)), Err::TypeMismatch,
            "component input does not match the source context");
    require(diagram_equal(boundary_diagram(out.d(), Sign::Plus), apply_ctx(t->tgt, a)), Err::TypeMismatch,
            "component output does not match the target context");
    return out;
}

// --- naturality -----------------------------------------------------------------------

NatPtr naturality_witness(const NatPtr& t, const Diagram& a, const Diagram& b) {
    require(parallel(a, b) && a.dim() == t->v.dim() + 1, Err::TypeMismatch,
            "naturality witnesses are indexed by parallel index pairs");
    return std::visit(
        [&](const auto& n) -> NatPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NUnitFamily>) {
                // (- # eps b  ==>  -)  then  (-  ==>  eps a # -)
                return nat_compose(nat_right_unitor(a, b, b.shape().all()),
                                   nat_left_unitor(a, b, a.shape().all()));
            } else if constexpr (std::is_same_v<T, NLeftUnitorFamily>) {
                Bitset pos = translate_subset(t->v, a, t->v.dim(), Sign::Minus, n.vsub);
                return nat_higher_unitor(a, b, t->v.dim(), pos, true);
            } else if constexpr (std::is_same_v<T, NRightUnitorFamily>) {
                Bitset pos = translate_subset(t->w, a, t->w.dim(), Sign::Plus, n.vsub);
                return nat_higher_unitor(a, b, t->w.dim(), pos, false);
            } else if constexpr (std::is_same_v<T, NHigherUnitorFamily>) {
                // the anchor lives at level k of the pair diagram; move it to
                // the matching boundary of the new pair
                Diagram vk = boundary_diagram(t->v, n.k, n.left ? Sign::Minus : Sign::Plus);
                SubDiagram vks = restrict_diagram(t->v, t->v.shape().boundary_set(n.k, n.left ? Sign::Minus : Sign::Plus));
                Bitset in_vk(vks.diagram.size());
                for (int x : n.vsub.to_vector()) {
                    int t2 = vks.new_of_old[static_cast<std::size_t>(x)];
                    require(t2 >= 0, Err::Internal, "higher unitor anchor escaped its level");
                    in_vk.set(static_cast<std::size_t>(t2));
                }
                Bitset pos = translate_subset(vks.diagram, a, n.k, n.left ? Sign::Minus : Sign::Plus, in_vk);
                (void)vk;
                return nat_higher_unitor(a, b, n.k, pos, n.left);
            } else if constexpr (std::is_same_v<T, NPushforward>) {
                // unit swap under the promoted base, then the pasted h
                CtxPtr fab = ctx_promote(n.base, a, b);
                Diagram faa = apply_ctx(n.base, a), fbb = apply_ctx(n.base, b);
                NatPtr swap = nat_compose(nat_right_unitor(faa, fbb, fbb.shape().all()),
                                          nat_left_unitor(faa, fbb, faa.shape().all()));
                NatPtr inner = nat_right_ctx(swap, fab);
                Bitset pos_b = context_subdiagram_at(n.cs, b);
                Diagram cs_whole = apply_context_subdiagram(n.cs, b).result;
                SubDiagram zpart = restrict_diagram(cs_whole, cs_whole.shape().poset()->closure(pos_b));
                std::vector<int> iota(n.h.d().size(), -1);
                Bitset hin = n.h.d().shape().boundary_set(Sign::Minus);
                SubDiagram hins = restrict_diagram(n.h.d(), hin);
                auto iso = find_isomorphism(hins.diagram.shape().poset(), zpart.diagram.shape().poset());
                require(iso.has_value(), Err::Internal, "pushforward naturality lost the position");
                for (std::size_t k = 0; k < hins.old_of_new.size(); ++k)
                    iota[static_cast<std::size_t>(hins.old_of_new[k])] =
                        zpart.old_of_new[static_cast<std::size_t>(iso->assign[k])];
                CtxPtr hb = ctx_right_paste(n.h.d(), iota, faa, fbb, n.h.cert());
                return nat_left_ctx(hb, inner);
            } else if constexpr (std::is_same_v<T, NComposeNat>) {
                // F- # (theta b # psi b)  ==>  (theta a # psi a) # H-
                NatPtr na = naturality_witness(n.a, a, b);
                NatPtr nb = naturality_witness(n.b, a, b);
                RichEquiv ta = nat_component(n.a, a);
                RichEquiv pb = nat_component(n.b, b);
                CtxPtr rpb = rp_whole(pb, na->src->cod_v, na->src->cod_w);
                CtxPtr lpa = lp_whole(ta, nb->src->cod_v, nb->src->cod_w);
                return nat_compose(nat_left_ctx(rpb, na), nat_left_ctx(lpa, nb));
            } else if constexpr (std::is_same_v<T, NLeftCtx>) {
                // (HF)- # [H theta b # eps HGb]  ==>  [H theta a # eps HGa] # (HG)-
                NatPtr inner = naturality_witness(n.t, a, b);
                Diagram fa = apply_ctx(n.t->src, a), gb = apply_ctx(n.t->tgt, b);
                Diagram ga = apply_ctx(n.t->tgt, a);
                CtxPtr hp = ctx_promote(n.h, fa, gb);
                Diagram hgb = apply_ctx(n.h, gb);
                StructCell cap = unit(hgb);
                CtxPtr hp_then = ctx_compose(hp, inner->src);
                CtxPtr capc = ctx_right_paste_whole(cap.w.diagram, hp_then->cod_v, hp_then->cod_w,
                                                    cert_degeneracy(cap.w));
                NatPtr w1 = nat_left_ctx(capc, nat_left_ctx(hp, inner));
                // drop the trailing eps(HGb)
                CtxPtr p2 = ctx_compose(hp, inner->tgt);
                NatPtr w2 = nat_right_ctx(nat_right_unitor(p2->cod_v, p2->cod_w, p2->cod_w.shape().all()), p2);
                // insert eps(HGa) after H theta a
                RichEquiv hta = context_apply_rich(n.h, nat_component(n.t, a));
                CtxPtr hg_ab = ctx_promote(ctx_compose(n.h, n.t->tgt), a, b);
                ContextSubdiagram cs;
                cs.u_on_left = true;
                cs.u = hta.d();
                cs.rest = hg_ab;
                cs.sub = hta.d().shape().all();
                cs.rewritable = true;
                StructCell rho = right_unitor(hta.d(), hta.d().shape().boundary_set(Sign::Plus));
                NatPtr w3 = nat_pushforward(p2, cs, rich_sym(rich_degenerate(rho.w)));
                (void)ga;
                return nat_compose(nat_compose(w1, w2), w3);
            } else if constexpr (std::is_same_v<T, NWeakInv>) {
                // G- # theta* b  ==>  theta* a # F-
                NatPtr inner = naturality_witness(n.t, a, b);
                RichEquiv ta = nat_component(n.t, a), tb = nat_component(n.t, b);
                RichEquiv sa = rich_sym(ta), sb = rich_sym(tb);
                Diagram ga = apply_ctx(n.t->tgt, a);
                Diagram fa = apply_ctx(n.t->src, a), fb = apply_ctx(n.t->src, b);
                CtxPtr gab = ctx_promote(n.t->tgt, a, b);
                CtxPtr m0 = ctx_compose(rp_whole(sb, gab->cod_v, gab->cod_w), gab);
                NatPtr s1 = nat_right_ctx(nat_left_unitor(m0->cod_v, m0->cod_w, m0->cod_v.shape().all()), m0);
                ContextSubdiagram cs2;
                cs2.u_on_left = true;
                cs2.u = unit(ga).w.diagram;
                cs2.rest = m0;
                cs2.sub = cs2.u.shape().all();
                cs2.rewritable = true;
                NatPtr s2 = nat_pushforward(s1->tgt, cs2, ta.invertor_h());
                CtxPtr rw = rp_whole(sb, inner->tgt->cod_v, inner->tgt->cod_w);
                CtxPtr mid_src = ctx_compose(rw, inner->tgt);  // (theta a # G-) # theta* b
                CtxPtr lw = lp_whole(sa, mid_src->cod_v, mid_src->cod_w);
                NatPtr s3 = nat_left_ctx(lw, nat_left_ctx(rw, nat_weak_inv(inner)));
                ContextSubdiagram cs4;
                cs4.u_on_left = false;
                cs4.u = paste_top(tb.d(), sb.d()).whole;
                cs4.rest = ctx_compose(lp_whole(sa, fa, fb), ctx_promote(n.t->src, a, b));
                cs4.sub = cs4.u.shape().all();
                cs4.rewritable = true;
                NatPtr s4 = nat_pushforward(s3->tgt, cs4, tb.invertor_z());
                NatPtr s5 = nat_right_ctx(
                    nat_right_unitor(s4->tgt->cod_v, s4->tgt->cod_w, s4->tgt->cod_w.shape().all()), s4->tgt);
                return nat_compose(nat_compose(nat_compose(nat_compose(s1, s2), s3), s4), s5);
            } else if constexpr (std::is_same_v<T, NRightCtx>) {
                return nat_right_ctx(naturality_witness(n.t, apply_ctx(n.h, a), apply_ctx(n.h, b)),
                                     ctx_promote(n.h, a, b));
            } else {  // NDerived
                return naturality_witness(n.payload, a, b);
            }
        },
        t->node);
}


// --- the rounding lemmas (one step) ---------------------------------------------

NatPtr one_step_rounding(const CtxPtr& g, const CtxPtr& f, const Diagram& a, const Diagram& b) {
    // G . F_{a,b}  ==>  G . (F_{a,b}(-) # eps(Fb)), as the inverted right
    // unitor at the copy of Fb inside the composite's output pair diagram.
    // The eps(Fb) attaches along that copy only, so the target action agrees
    // with G applied after the rounding exactly.
    CtxPtr gf = ctx_compose(g, ctx_promote(f, a, b));
    Diagram fb = apply_ctx(f, b);
    auto emb = embed_diagram(fb, gf->cod_w);
    require(emb.has_value(), Err::Undecided,
            "rounding step: the lower pair does not survive in the composite boundary");
    Bitset pos(gf->cod_w.size());
    for (int t : *emb) pos.set(static_cast<std::size_t>(t));
    return nat_right_ctx(nat_weak_inv(nat_right_unitor(gf->cod_v, gf->cod_w, pos)), gf);
}

CtxWithNat eversion(const NatPtr& theta, const Diagram& a, const Diagram& b) {
    RichEquiv ta = nat_component(theta, a);
    RichEquiv tb = nat_component(theta, b);
    RichEquiv sb = rich_sym(tb);
    const CtxPtr& fsrc = theta->src;
    const CtxPtr& gtgt = theta->tgt;
    Diagram fa = apply_ctx(fsrc, a), fb = apply_ctx(fsrc, b);
    Diagram ga = apply_ctx(gtgt, a), gb = apply_ctx(gtgt, b);

    // C = theta a # (-) # theta* b : pd(Ga, Gb) -> pd(Fa, Fb)
    CtxPtr rp = ctx_right_paste_whole(sb.d(), ga, gb, sb.cert());
    CtxPtr c = ctx_compose(ctx_left_paste_whole(ta.d(), rp->cod_v, rp->cod_w, ta.cert()), rp);

    // chain: C . R_{a,b}G  ==>  C . G_{a,b}  ==>  F_{a,b} # theta b # theta* b  ==>  R_{a,b}F
    NatPtr s1 = nat_weak_inv(one_step_rounding(c, gtgt, a, b));
    NatPtr inner = naturality_witness(theta, a, b);
    CtxPtr rpb = ctx_right_paste_whole(sb.d(), inner->tgt->cod_v, inner->tgt->cod_w, sb.cert());
    NatPtr s2 = nat_left_ctx(rpb, nat_weak_inv(inner));
    ContextSubdiagram cs;
    cs.u_on_left = false;
    cs.u = paste_top(tb.d(), sb.d()).whole;
    cs.rest = ctx_promote(fsrc, a, b);
    cs.sub = cs.u.shape().all();
    cs.rewritable = true;
    NatPtr s3 = nat_pushforward(s2->tgt, cs, tb.invertor_z());
    NatPtr chain = nat_compose(nat_compose(s1, s2), s3);
    (void)fa;
    (void)fb;
    return {c, nat_weak_inv(chain)};
}

CtxWithNat rounding_unit(const Diagram& v, const Diagram& w, const Diagram& a, const Diagram& b) {
    require(diagram_equal(boundary_diagram(a, Sign::Minus), v) && diagram_equal(boundary_diagram(a, Sign::Plus), w),
            Err::ChainMismatch, "rounding unit: pair must descend to the base pair");
    RichEquiv ea = rich_refl(a);
    RichEquiv eb = rich_refl(b);
    RichEquiv reb = rich_sym(eb);
    // J = eps a # (-) # rev eps b on pd(a, b)
    CtxPtr rp = ctx_right_paste_whole(reb.d(), a, b, reb.cert());
    CtxPtr j = ctx_compose(ctx_left_paste_whole(ea.d(), rp->cod_v, rp->cod_w, ea.cert()), rp);

    // -  ==>  - # eps b  ==>  - # (eps b # rev eps b)  ==>  eps a # ...
    NatPtr s1 = nat_weak_inv(nat_right_unitor(a, b, b.shape().all()));
    CtxPtr m1 = s1->tgt;
    ContextSubdiagram cs;
    cs.u_on_left = false;
    cs.u = eb.d();
    cs.rest = ctx_identity(a, b);
    cs.sub = eb.d().shape().all();
    cs.rewritable = true;
    StructCell zeta = left_invertor(unit(b).w);
    NatPtr s2 = nat_pushforward(m1, cs, rich_sym(rich_degenerate(zeta.w)));
    NatPtr s3 = nat_right_ctx(nat_left_unitor(s2->tgt->cod_v, s2->tgt->cod_w, s2->tgt->cod_v.shape().all()),
                              s2->tgt);
    return {j, nat_compose(nat_compose(s1, s2), s3)};
}

CtxWithNat rounding_functor(const CtxPtr& f, const CtxPtr& g, const Diagram& a, const Diagram& b) {
    // R_{a,b}(GF)  ==>  M . (R_{Fa,Fb}G) . R_{a,b}F
    Diagram fa = apply_ctx(f, a), fb = apply_ctx(f, b);
    Diagram gfa = apply_ctx(g, fa), gfb = apply_ctx(g, fb);
    RichEquiv e1 = rich_refl(gfa);
    RichEquiv e2 = rich_sym(rich_refl(gfb));
    CtxPtr rg = rounded_context(g, {{fa, fb}});
    CtxPtr rf = rounded_context(f, {{a, b}});
    CtxPtr tail = ctx_compose(rg, rf);
    CtxPtr rp = ctx_right_paste_whole(e2.d(), tail->cod_v, tail->cod_w, e2.cert());
    CtxPtr m = ctx_compose(ctx_left_paste_whole(e1.d(), rp->cod_v, rp->cod_w, e1.cert()), rp);

    // R(GF) = (GF)_{a,b}(-) # eps(GFb); rewrite GF_{a,b} into G R F, then pad
    CtxPtr gf = ctx_compose(g, f);
    CtxPtr gfab = ctx_promote(gf, a, b);
    StructCell capb = unit(gfb);
    CtxPtr cap = ctx_right_paste_whole(capb.w.diagram, gfab->cod_v, gfab->cod_w, cert_degeneracy(capb.w));
    CtxPtr gp = ctx_promote(g, fa, fb);
    CtxPtr capgp = ctx_compose(cap, gp);
    NatPtr s1 = one_step_rounding(capgp, f, a, b);
    // after s1 the action is c |-> G(R F c) # eps(GFb) = (RG)(RF c)
    CtxPtr cur = s1->tgt;
    ContextSubdiagram cs;
    cs.u_on_left = false;
    cs.u = capb.w.diagram;
    cs.rest = ctx_compose(gp, rf);
    cs.sub = cs.u.shape().all();
    cs.rewritable = true;
    StructCell zeta = left_invertor(unit(gfb).w);
    NatPtr s2 = nat_pushforward(cur, cs, rich_sym(rich_degenerate(zeta.w)));
    NatPtr s3 = nat_right_ctx(nat_left_unitor(s2->tgt->cod_v, s2->tgt->cod_w, s2->tgt->cod_v.shape().all()),
                              s2->tgt);
    return {m, nat_compose(nat_compose(s1, s2), s3)};
}

// --- weak inverses of contexts -------------------------------------------------------

namespace {

// Lemma 5.8 one step: from a weak inverse of F, a left divisor of R_{a,b}F.
struct Rounded58 {
    CtxPtr divisor;  // J C M (R G)
    NatPtr expr;     // Id ==> divisor . R_{a,b}F
};

Rounded58 roundings_preserve(const CtxPtr& f, const ContextInverse& fin, const Diagram& a, const Diagram& b) {
    Diagram fa = apply_ctx(f, a), fb = apply_ctx(f, b);
    CtxWithNat ju = rounding_unit(f->v, f->w, a, b);
    NatPtr theta = nat_weak_inv(fin.to_id);  // Id ==> F* F
    CtxWithNat ev = eversion(theta, a, b);
    CtxWithNat mu = rounding_functor(f, fin.inverse, a, b);
    CtxPtr rginv = rounded_context(fin.inverse, {{fa, fb}});

    CtxPtr jc = ctx_compose(ju.ctx, ev.ctx);
    CtxPtr jcm = ctx_compose(jc, mu.ctx);
    CtxPtr divisor = ctx_compose(jcm, rginv);

    NatPtr e1 = ju.expr;                                  // Id ==> J R I
    NatPtr e2 = nat_left_ctx(ju.ctx, ev.expr);            // J R I ==> J C R(F* F)
    NatPtr e3 = nat_left_ctx(jc, mu.expr);                // ... ==> J C M (R F*)(R F)
    return {divisor, nat_compose(nat_compose(e1, e2), e3)};
}

}  // namespace

ContextInverse trim_inverse(const CtxPtr& e) {
    require(is_weakly_invertible(e), Err::NotWeaklyInvertible, "trim inverse needs leaf certificates");
    if (std::holds_alternative<XIdentity>(e->node)) {
        CtxPtr id2 = ctx_identity(e->v, e->w);
        return {id2, nat_refl(ctx_compose(id2, e), ctx_identity(e->v, e->w)),
                nat_refl(ctx_compose(e, id2), ctx_identity(e->v, e->w))};
    }
    if (const auto* lp = as_lp(e)) {
        RichEquiv u = rich_from_cert(Equiv{lp->u, lp->cert});
        RichEquiv us = rich_sym(u);
        // E* = u* pasted at the moved position in the codomain
        std::vector<int> iota(us.d().size(), -1);
        {
            Bitset cap = us.d().shape().boundary_set(Sign::Plus);
            SubDiagram caps = restrict_diagram(us.d(), cap);
            Bitset img(e->cod_v.size());
            for (int t : lp->cod_anchor)
                if (t >= 0) img.set(static_cast<std::size_t>(t));
            SubDiagram tgt = restrict_diagram(e->cod_v, e->cod_v.shape().poset()->closure(img));
            auto iso = find_isomorphism(caps.diagram.shape().poset(), tgt.diagram.shape().poset());
            require(iso.has_value(), Err::Internal, "trim inverse: leaf does not reattach");
            for (std::size_t k = 0; k < caps.old_of_new.size(); ++k)
                iota[static_cast<std::size_t>(caps.old_of_new[k])] =
                    tgt.old_of_new[static_cast<std::size_t>(iso->assign[k])];
        }
        CtxPtr estar = ctx_left_paste(us.d(), iota, e->cod_v, e->cod_w, us.cert());

        // E* E ==> Id: pushforward with (u* # u => eps bd+ u), then kill the unit
        ContextSubdiagram cs;
        cs.u_on_left = true;
        cs.u = paste_top(us.d(), u.d()).whole;
        cs.rest = ctx_identity(e->v, e->w);
        cs.sub = cs.u.shape().all();
        cs.rewritable = true;
        NatPtr p1 = nat_pushforward(ctx_compose(estar, e), cs, rich_sym(u.invertor_h()));
        Bitset vsub(e->v.size());
        for (std::size_t x = 0; x < lp->iota.size(); ++x)
            if (lp->iota[x] >= 0) vsub.set(static_cast<std::size_t>(lp->iota[x]));
        NatPtr p2 = nat_weak_inv(nat_left_unitor(e->v, e->w, e->v.shape().poset()->closure(vsub)));
        NatPtr to_id = nat_compose(p1, p2);

        // E E* ==> Id
        ContextSubdiagram cs2;
        cs2.u_on_left = true;
        cs2.u = paste_top(u.d(), us.d()).whole;
        cs2.rest = ctx_identity(e->cod_v, e->cod_w);
        cs2.sub = cs2.u.shape().all();
        cs2.rewritable = true;
        NatPtr q1 = nat_pushforward(ctx_compose(e, estar), cs2, u.invertor_z());
        Bitset vsub2(e->cod_v.size());
        for (int t : lp->cod_anchor)
            if (t >= 0) vsub2.set(static_cast<std::size_t>(t));
        NatPtr q2 = nat_weak_inv(nat_left_unitor(e->cod_v, e->cod_w, e->cod_v.shape().poset()->closure(vsub2)));
        NatPtr from_id = nat_compose(q1, q2);
        return {estar, to_id, from_id};
    }
    if (const auto* rp = as_rp(e)) {
        RichEquiv u = rich_from_cert(Equiv{rp->u, rp->cert});
        RichEquiv us = rich_sym(u);
        std::vector<int> iota(us.d().size(), -1);
        {
            Bitset cap = us.d().shape().boundary_set(Sign::Minus);
            SubDiagram caps = restrict_diagram(us.d(), cap);
            Bitset img(e->cod_w.size());
            for (int t : rp->cod_anchor)
                if (t >= 0) img.set(static_cast<std::size_t>(t));
            SubDiagram tgt = restrict_diagram(e->cod_w, e->cod_w.shape().poset()->closure(img));
            auto iso = find_isomorphism(caps.diagram.shape().poset(), tgt.diagram.shape().poset());
            require(iso.has_value(), Err::Internal, "trim inverse: leaf does not reattach");
            for (std::size_t k = 0; k < caps.old_of_new.size(); ++k)
                iota[static_cast<std::size_t>(caps.old_of_new[k])] =
                    tgt.old_of_new[static_cast<std::size_t>(iso->assign[k])];
        }
        CtxPtr estar = ctx_right_paste(us.d(), iota, e->cod_v, e->cod_w, us.cert());

        ContextSubdiagram cs;
        cs.u_on_left = false;
        cs.u = paste_top(u.d(), us.d()).whole;
        cs.rest = ctx_identity(e->v, e->w);
        cs.sub = cs.u.shape().all();
        cs.rewritable = true;
        NatPtr p1 = nat_pushforward(ctx_compose(estar, e), cs, u.invertor_z());
        Bitset vsub(e->w.size());
        for (std::size_t x = 0; x < rp->iota.size(); ++x)
            if (rp->iota[x] >= 0) vsub.set(static_cast<std::size_t>(rp->iota[x]));
        NatPtr p2 = nat_weak_inv(nat_right_unitor(e->v, e->w, e->w.shape().poset()->closure(vsub)));
        NatPtr to_id = nat_compose(p1, p2);

        ContextSubdiagram cs2;
        cs2.u_on_left = false;
        cs2.u = paste_top(us.d(), u.d()).whole;
        cs2.rest = ctx_identity(e->cod_v, e->cod_w);
        cs2.sub = cs2.u.shape().all();
        cs2.rewritable = true;
        NatPtr q1 = nat_pushforward(ctx_compose(e, estar), cs2, rich_sym(u.invertor_h()));
        Bitset vsub2(e->cod_w.size());
        for (int t : rp->cod_anchor)
            if (t >= 0) vsub2.set(static_cast<std::size_t>(t));
        NatPtr q2 = nat_weak_inv(nat_right_unitor(e->cod_v, e->cod_w, e->cod_w.shape().poset()->closure(vsub2)));
        NatPtr from_id = nat_compose(q1, q2);
        return {estar, to_id, from_id};
    }
    if (const auto* cp = std::get_if<XCompose>(&e->node)) {
        ContextInverse ri = trim_inverse(cp->inner);
        ContextInverse ro = trim_inverse(cp->outer);
        CtxPtr estar = ctx_compose(ri.inverse, ro.inverse);
        NatPtr to_id = nat_compose(nat_left_ctx(ri.inverse, nat_right_ctx(ro.to_id, cp->inner)), ri.to_id);
        NatPtr from_id = nat_compose(nat_left_ctx(cp->outer, nat_right_ctx(ri.from_id, ro.inverse)), ro.from_id);
        return {estar, to_id, from_id};
    }
    fail(Err::NotWeaklyInvertible, "trim inverse applies to trim contexts only");
}

CtxWithNat left_inverse_context(const CtxPtr& e) {
    require(is_weakly_invertible(e), Err::NotWeaklyInvertible, "left inverse needs a weakly invertible context");
    if (is_trim(e)) {
        ContextInverse t = trim_inverse(e);
        return {t.inverse, t.to_id};
    }
    TrimFactorisation tf = trim_factorize(e);
    ContextInverse rec = weak_inverse_context(tf.lower);
    ContextInverse ti = trim_inverse(tf.trim);
    Rounded58 rp = roundings_preserve(tf.lower, rec, e->v, e->w);
    CtxPtr c = ctx_compose(rp.divisor, ti.inverse);
    CtxPtr r = rounded_context(tf.lower, {{e->v, e->w}});
    NatPtr sigma = one_step_rounding(tf.trim, tf.lower, e->v, e->w);
    NatPtr c1 = nat_left_ctx(c, sigma);
    NatPtr c2 = nat_left_ctx(rp.divisor, nat_right_ctx(ti.to_id, r));
    NatPtr c3 = nat_weak_inv(rp.expr);
    return {c, nat_compose(nat_compose(c1, c2), c3)};
}

namespace {

// Lemma: G F ==> Id with G weakly invertible gives F G ==> Id.
NatPtr left_to_right(const CtxPtr& g, const CtxPtr& f, const NatPtr& beta) {
    CtxWithNat gamma = left_inverse_context(g);
    NatPtr d1 = nat_right_ctx(gamma.expr, ctx_compose(f, g));
    NatPtr d2 = nat_left_ctx(gamma.ctx, nat_right_ctx(beta, g));
    return nat_compose(nat_compose(nat_weak_inv(d1), d2), gamma.expr);
}

}  // namespace

ContextInverse weak_inverse_context(const CtxPtr& e) {
    require(is_weakly_invertible(e), Err::NotWeaklyInvertible, "weak inverse needs a weakly invertible context");
    if (is_trim(e)) return trim_inverse(e);
    TrimFactorisation tf = trim_factorize(e);
    ContextInverse rec = weak_inverse_context(tf.lower);
    ContextInverse ti = trim_inverse(tf.trim);
    Rounded58 rp = roundings_preserve(tf.lower, rec, e->v, e->w);
    CtxPtr estar = ctx_compose(rp.divisor, ti.inverse);
    CtxPtr r = rounded_context(tf.lower, {{e->v, e->w}});
    NatPtr sigma = one_step_rounding(tf.trim, tf.lower, e->v, e->w);

    NatPtr t1 = nat_left_ctx(estar, sigma);
    NatPtr t2 = nat_left_ctx(rp.divisor, nat_right_ctx(ti.to_id, r));
    NatPtr t3 = nat_weak_inv(rp.expr);
    NatPtr to_id = nat_compose(nat_compose(t1, t2), t3);

    NatPtr exprR = left_to_right(rp.divisor, r, nat_weak_inv(rp.expr));
    NatPtr u1 = nat_right_ctx(sigma, estar);
    NatPtr u2 = nat_left_ctx(tf.trim, nat_right_ctx(exprR, ti.inverse));
    NatPtr u3 = ti.from_id;
    NatPtr from_id = nat_compose(nat_compose(u1, u2), u3);
    return {estar, to_id, from_id};
}

// --- division ---------------------------------------------------------------------------

DivisionResult divide(const CtxPtr& e, const Diagram& b) {
    require(is_weakly_invertible(e), Err::NotWeaklyInvertible, "division needs a weakly invertible context");
    require(b.valid() && b.round(), Err::TypeMismatch, "division needs a round diagram");
    ContextInverse wi = weak_inverse_context(e);
    DivisionResult out;
    out.solution = apply_ctx(wi.inverse, b);
    out.witness = nat_component(wi.from_id, b);
    return out;
}

RoundTrip divide_roundtrip(const CtxPtr& e, const Diagram& a) {
    require(is_weakly_invertible(e), Err::NotWeaklyInvertible, "division needs a weakly invertible context");
    ContextInverse wi = weak_inverse_context(e);
    RoundTrip out;
    out.image = apply_ctx(e, a);
    out.back = apply_ctx(wi.inverse, out.image);
    out.witness = nat_component(wi.to_id, a);
    return out;
}

}  // namespace dsets
