#include "dsets/context.hpp"

#include <algorithm>

namespace dsets {

namespace {

CtxPtr mk_ctx(Context c) { return std::make_shared<Context>(std::move(c)); }

// Identify the subdiagram of `big` on the closed subset `part` with `small`
// through the unique label-preserving isomorphism; returns the map from
// small's elements to big's.
std::vector<int> identify_part(const Diagram& small, const Diagram& big, const Bitset& part) {
    SubDiagram sd = restrict_diagram(big, part);
    auto iso = find_isomorphism(small.shape().poset(), sd.diagram.shape().poset());
    require(iso.has_value(), Err::TypeMismatch, "subdiagram does not match the expected part");
    std::vector<int> out(small.size());
    for (std::size_t x = 0; x < small.size(); ++x) {
        require(small.label(static_cast<int>(x)) == sd.diagram.label(iso->assign[x]), Err::TypeMismatch,
                "subdiagram labels do not match the expected part");
        out[x] = sd.old_of_new[static_cast<std::size_t>(iso->assign[x])];
    }
    return out;
}

}  // namespace

CtxPtr ctx_identity(const Diagram& v, const Diagram& w) {
    require(v.valid() && w.valid(), Err::TypeMismatch, "identity context needs a diagram pair");
    require(parallel(v, w), Err::TypeMismatch, "identity context needs a parallel pair");
    Context c;
    c.node = XIdentity{};
    c.v = v;
    c.w = w;
    c.cod_v = v;
    c.cod_w = w;
    c.dim = v.dim() + 1;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_left_paste(const Diagram& u, const std::vector<int>& iota, const Diagram& v, const Diagram& w,
                      CertPtr cert) {
    require(u.valid() && u.round(), Err::NotRound, "left pasting requires a round diagram");
    require(u.dim() == v.dim() + 1, Err::DimensionMismatch, "left pasting leaf must be one dimension up");
    // codomain: v with the iota image replaced by bd^- u
    Bitset image(v.size());
    Bitset bu = u.shape().boundary_set(Sign::Plus);
    for (std::size_t x = 0; x < iota.size(); ++x) {
        require((iota[x] >= 0) == bu.get(x), Err::NotSubmolecule, "iota domain must be the output boundary");
        if (iota[x] >= 0) {
            require(v.label(iota[x]) == u.label(static_cast<int>(x)), Err::LabelMismatch,
                    "left pasting leaf does not match the domain diagram");
            image.set(static_cast<std::size_t>(iota[x]));
        }
    }
    DiagSubstitution vsub = substitute_diagram(v, boundary_diagram(u, Sign::Minus), image);
    Diagram vprime = vsub.whole;
    // anchor of bd^- u inside the codomain input diagram
    std::vector<int> cod_anchor(u.size(), -1);
    {
        Bitset bm = u.shape().boundary_set(Sign::Minus);
        SubDiagram bmd = restrict_diagram(u, bm);
        for (std::size_t j = 0; j < bmd.old_of_new.size(); ++j)
            cod_anchor[static_cast<std::size_t>(bmd.old_of_new[j])] = vsub.incl_w[j];
    }
    Context c;
    c.node = XLeftPaste{u, iota, std::move(cert), std::move(cod_anchor)};
    c.v = v;
    c.w = w;
    c.cod_v = vprime;
    c.cod_w = w;
    c.dim = v.dim() + 1;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_right_paste(const Diagram& u, const std::vector<int>& iota, const Diagram& v, const Diagram& w,
                       CertPtr cert) {
    require(u.valid() && u.round(), Err::NotRound, "right pasting requires a round diagram");
    require(u.dim() == w.dim() + 1, Err::DimensionMismatch, "right pasting leaf must be one dimension up");
    Bitset image(w.size());
    Bitset bu = u.shape().boundary_set(Sign::Minus);
    for (std::size_t x = 0; x < iota.size(); ++x) {
        require((iota[x] >= 0) == bu.get(x), Err::NotSubmolecule, "iota domain must be the input boundary");
        if (iota[x] >= 0) {
            require(w.label(iota[x]) == u.label(static_cast<int>(x)), Err::LabelMismatch,
                    "right pasting leaf does not match the codomain diagram");
            image.set(static_cast<std::size_t>(iota[x]));
        }
    }
    DiagSubstitution wsub = substitute_diagram(w, boundary_diagram(u, Sign::Plus), image);
    Diagram wprime = wsub.whole;
    std::vector<int> cod_anchor(u.size(), -1);
    {
        Bitset bp = u.shape().boundary_set(Sign::Plus);
        SubDiagram bpd = restrict_diagram(u, bp);
        for (std::size_t j = 0; j < bpd.old_of_new.size(); ++j)
            cod_anchor[static_cast<std::size_t>(bpd.old_of_new[j])] = wsub.incl_w[j];
    }
    Context c;
    c.node = XRightPaste{u, iota, std::move(cert), std::move(cod_anchor)};
    c.v = v;
    c.w = w;
    c.cod_v = v;
    c.cod_w = wprime;
    c.dim = v.dim() + 1;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_left_paste_whole(const Diagram& u, const Diagram& v, const Diagram& w, CertPtr cert) {
    Bitset bu = u.shape().boundary_set(Sign::Plus);
    SubDiagram bus = restrict_diagram(u, bu);
    std::vector<int> iota(u.size(), -1);
    auto ident = identify_part(bus.diagram, v, v.shape().all());
    for (std::size_t k = 0; k < bus.old_of_new.size(); ++k)
        iota[static_cast<std::size_t>(bus.old_of_new[k])] = ident[k];
    return ctx_left_paste(u, iota, v, w, std::move(cert));
}

CtxPtr ctx_right_paste_whole(const Diagram& u, const Diagram& v, const Diagram& w, CertPtr cert) {
    Bitset bu = u.shape().boundary_set(Sign::Minus);
    SubDiagram bus = restrict_diagram(u, bu);
    std::vector<int> iota(u.size(), -1);
    auto ident = identify_part(bus.diagram, w, w.shape().all());
    for (std::size_t k = 0; k < bus.old_of_new.size(); ++k)
        iota[static_cast<std::size_t>(bus.old_of_new[k])] = ident[k];
    return ctx_right_paste(u, iota, v, w, std::move(cert));
}

CtxPtr ctx_left_wrap(const Diagram& u, const std::vector<int>& anchor, const Diagram& v, const Diagram& w,
                     CertPtr cert) {
    require(u.dim() == v.dim() + 1, Err::DimensionMismatch, "left wrap must be one dimension up");
    Bitset image(u.size());
    Bitset bu = u.shape().boundary_set(Sign::Plus);
    for (std::size_t x = 0; x < anchor.size(); ++x) {
        require(anchor[x] >= 0, Err::NotSubmolecule, "left wrap anchor must be total on the pair diagram");
        require(bu.get(static_cast<std::size_t>(anchor[x])), Err::NotSubmolecule,
                "left wrap anchor must land in the output boundary");
        require(u.label(anchor[x]) == v.label(static_cast<int>(x)), Err::LabelMismatch,
                "left wrap anchor must preserve labels");
        image.set(static_cast<std::size_t>(anchor[x]));
    }
    // codomain input: bd^- u with the anchor image of v replaced by v... the
    // anchor is a subdiagram of bd^+ u; the codomain pair is
    // (subs(bd^- u ... )) -- for a wrap, the result of pasting a: v => w into
    // u has input bd^- u and output bd^+ u with v-anchor replaced by w.
    Diagram cod_w_d = substitute_diagram(boundary_diagram(u, Sign::Plus), w, [&] {
        Bitset img(u.size());
        for (int t : anchor) img.set(static_cast<std::size_t>(t));
        // translate into the boundary restriction
        SubDiagram bd = restrict_diagram(u, u.shape().boundary_set(Sign::Plus));
        Bitset out(bd.diagram.size());
        for (int t : anchor) out.set(static_cast<std::size_t>(bd.new_of_old[static_cast<std::size_t>(t)]));
        return out;
    }()).whole;
    Context c;
    c.node = XLeftWrap{u, anchor, std::move(cert)};
    c.v = v;
    c.w = w;
    c.cod_v = boundary_diagram(u, Sign::Minus);
    c.cod_w = cod_w_d;
    c.dim = v.dim() + 1;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_right_wrap(const Diagram& u, const std::vector<int>& anchor, const Diagram& v, const Diagram& w,
                      CertPtr cert) {
    require(u.dim() == w.dim() + 1, Err::DimensionMismatch, "right wrap must be one dimension up");
    Bitset bu = u.shape().boundary_set(Sign::Minus);
    for (std::size_t x = 0; x < anchor.size(); ++x) {
        require(anchor[x] >= 0, Err::NotSubmolecule, "right wrap anchor must be total on the pair diagram");
        require(bu.get(static_cast<std::size_t>(anchor[x])), Err::NotSubmolecule,
                "right wrap anchor must land in the input boundary");
        require(u.label(anchor[x]) == w.label(static_cast<int>(x)), Err::LabelMismatch,
                "right wrap anchor must preserve labels");
    }
    Diagram cod_v_d = substitute_diagram(boundary_diagram(u, Sign::Minus), v, [&] {
        SubDiagram bd = restrict_diagram(u, u.shape().boundary_set(Sign::Minus));
        Bitset out(bd.diagram.size());
        for (int t : anchor) out.set(static_cast<std::size_t>(bd.new_of_old[static_cast<std::size_t>(t)]));
        return out;
    }()).whole;
    Context c;
    c.node = XRightWrap{u, anchor, std::move(cert)};
    c.v = v;
    c.w = w;
    c.cod_v = cod_v_d;
    c.cod_w = boundary_diagram(u, Sign::Plus);
    c.dim = v.dim() + 1;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_subst_at(const CtxPtr& base, const ContextSubdiagram& cs, const Diagram& z_new) {
    require(cs.rewritable, Err::NotRewritable, "substitution targets a rewritable context subdiagram");
    SubDiagram z = restrict_diagram(cs.u, cs.sub);
    require(parallel(z.diagram, z_new), Err::NotParallel, "context substitution needs a parallel replacement");
    Context c;
    auto node = std::make_shared<XSubstAt>();
    node->base = base;
    node->cs = cs;
    node->z_new = z_new;
    c.node = std::shared_ptr<const XSubstAt>(node);
    c.v = base->v;
    c.w = base->w;
    // the replacement is parallel and top-dimensional, so the codomain pair
    // is that of the base context
    c.cod_v = base->cod_v;
    c.cod_w = base->cod_w;
    c.dim = base->dim;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_compose(const CtxPtr& outer, const CtxPtr& inner) {
    require(outer->dim == inner->dim, Err::DimensionMismatch, "composed contexts must share a dimension");
    require(diagram_equal(outer->v, inner->cod_v) && diagram_equal(outer->w, inner->cod_w), Err::TypeMismatch,
            "composed contexts must be typable");
    Context c;
    c.node = XCompose{outer, inner};
    c.v = inner->v;
    c.w = inner->w;
    c.cod_v = outer->cod_v;
    c.cod_w = outer->cod_w;
    c.dim = inner->dim;
    return mk_ctx(std::move(c));
}

CtxPtr ctx_promote(const CtxPtr& inner, const Diagram& v, const Diagram& w) {
    require(v.dim() > 0, Err::DimensionTooLow, "promotion needs a positive-dimensional pair");
    require(parallel(v, w), Err::TypeMismatch, "promotion needs a parallel pair");
    require(diagram_equal(boundary_diagram(v, Sign::Minus), inner->v) &&
                diagram_equal(boundary_diagram(w, Sign::Plus), inner->w),
            Err::TypeMismatch, "promoted context must live on the boundary pair");
    Context c;
    c.node = XPromote{inner};
    c.v = v;
    c.w = w;
    c.dim = v.dim() + 1;
    CtxApply cv = apply_context(inner, v);
    CtxApply cw = apply_context(inner, w);
    c.cod_v = cv.result;
    c.cod_w = cw.result;
    return mk_ctx(std::move(c));
}

CtxApply apply_context(const CtxPtr& f, const Diagram& a) {
    const int k = f->dim - 1;  // dimension of the domain pair
    require(a.valid() && a.dim() > k, Err::TypeMismatch,
            "context applied outside its degree range (" + ctx_to_string(f) + " dim " + std::to_string(f->dim) +
                " on a diagram of dimension " + std::to_string(a.valid() ? a.dim() : -1) + ")");
    return std::visit(
        [&](const auto& n) -> CtxApply {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, XIdentity>) {
                CtxApply out;
                out.result = a;
                out.hole_map.resize(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) out.hole_map[i] = static_cast<int>(i);
                return out;
            } else if constexpr (std::is_same_v<T, XLeftPaste>) {
                // translate iota through the identification of v with bd_k^- a
                Bitset bda = a.shape().boundary_set(k, Sign::Minus);
                auto v_in_a = identify_part(f->v, a, bda);
                std::vector<int> iota(n.u.size(), -1);
                for (std::size_t x = 0; x < n.iota.size(); ++x)
                    if (n.iota[x] >= 0) iota[x] = v_in_a[static_cast<std::size_t>(n.iota[x])];
                DiagPasting p = paste_diagrams_sub(n.u, a, k, iota, true);
                return {p.whole, p.incl_right};
            } else if constexpr (std::is_same_v<T, XRightPaste>) {
                Bitset bda = a.shape().boundary_set(k, Sign::Plus);
                auto w_in_a = identify_part(f->w, a, bda);
                std::vector<int> iota(n.u.size(), -1);
                for (std::size_t x = 0; x < n.iota.size(); ++x)
                    if (n.iota[x] >= 0) iota[x] = w_in_a[static_cast<std::size_t>(n.iota[x])];
                DiagPasting p = paste_diagrams_sub(a, n.u, k, iota, false);
                return {p.whole, p.incl_left};
            } else if constexpr (std::is_same_v<T, XCompose>) {
                CtxApply first = apply_context(n.inner, a);
                CtxApply second = apply_context(n.outer, first.result);
                CtxApply out;
                out.result = second.result;
                out.hole_map.resize(a.size());
                for (std::size_t i = 0; i < a.size(); ++i)
                    out.hole_map[i] = second.hole_map[static_cast<std::size_t>(first.hole_map[i])];
                return out;
            } else if constexpr (std::is_same_v<T, XPromote>) {
                if (a.dim() == f->dim) {
                    require(diagram_equal(boundary_diagram(a, Sign::Minus), f->v) &&
                                diagram_equal(boundary_diagram(a, Sign::Plus), f->w),
                            Err::TypeMismatch, "promoted context applied to a diagram of the wrong type");
                }
                return apply_context(n.inner, a);
            } else if constexpr (std::is_same_v<T, XLeftWrap>) {
                // glue a's whole input onto the anchor inside bd^+ u
                Bitset bda = a.shape().boundary_set(k, Sign::Minus);
                auto v_in_a = identify_part(f->v, a, bda);
                std::vector<int> iota(a.size(), -1);
                for (std::size_t x = 0; x < v_in_a.size(); ++x)
                    iota[static_cast<std::size_t>(v_in_a[x])] = n.anchor[x];
                DiagPasting p = paste_diagrams_sub(n.u, a, k, iota, false);
                return {p.whole, p.incl_right};
            } else if constexpr (std::is_same_v<T, XRightWrap>) {
                Bitset bda = a.shape().boundary_set(k, Sign::Plus);
                auto w_in_a = identify_part(f->w, a, bda);
                std::vector<int> iota(a.size(), -1);
                for (std::size_t x = 0; x < w_in_a.size(); ++x)
                    iota[static_cast<std::size_t>(w_in_a[x])] = n.anchor[x];
                DiagPasting p = paste_diagrams_sub(a, n.u, k, iota, true);
                return {p.whole, p.incl_left};
            } else {  // XSubstAt
                CtxApply base = apply_context(n->base, a);
                Bitset pos = context_subdiagram_at(n->cs, a);
                require(pos.universe() == base.result.size(), Err::Internal,
                        "context substitution position out of sync with the base action");
                DiagSubstitution sub = substitute_diagram(base.result, n->z_new,
                                                          base.result.shape().poset()->closure(pos));
                CtxApply out;
                out.result = sub.whole;
                out.hole_map.resize(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) {
                    int kept = sub.kept[static_cast<std::size_t>(base.hole_map[i])];
                    require(kept >= 0, Err::Internal, "context substitution excised part of the hole");
                    out.hole_map[i] = kept;
                }
                return out;
            }
        },
        f->node);
}

Diagram apply_ctx(const CtxPtr& f, const Diagram& a) { return apply_context(f, a).result; }

bool is_trim(const CtxPtr& f) {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, XCompose>) return is_trim(n.outer) && is_trim(n.inner);
            else if constexpr (std::is_same_v<T, std::shared_ptr<const XSubstAt>>) return is_trim(n->base);
            else return !std::is_same_v<T, XPromote>;
        },
        f->node);
}

bool is_weakly_invertible(const CtxPtr& f) {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, XLeftPaste> || std::is_same_v<T, XRightPaste> ||
                          std::is_same_v<T, XLeftWrap> || std::is_same_v<T, XRightWrap>)
                return n.cert != nullptr;
            else if constexpr (std::is_same_v<T, XCompose>)
                return is_weakly_invertible(n.outer) && is_weakly_invertible(n.inner);
            else if constexpr (std::is_same_v<T, XPromote>) return is_weakly_invertible(n.inner);
            else if constexpr (std::is_same_v<T, std::shared_ptr<const XSubstAt>>)
                return is_weakly_invertible(n->base);
            else return true;
        },
        f->node);
}

std::string ctx_to_string(const CtxPtr& f) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, XIdentity>) return "id";
            else if constexpr (std::is_same_v<T, XLeftPaste>) return "lp(dim " + std::to_string(n.u.dim()) + ")";
            else if constexpr (std::is_same_v<T, XRightPaste>) return "rp(dim " + std::to_string(n.u.dim()) + ")";
            else if constexpr (std::is_same_v<T, XLeftWrap>) return "lwrap(dim " + std::to_string(n.u.dim()) + ")";
            else if constexpr (std::is_same_v<T, XRightWrap>) return "rwrap(dim " + std::to_string(n.u.dim()) + ")";
            else if constexpr (std::is_same_v<T, XCompose>)
                return "comp(" + ctx_to_string(n.outer) + "," + ctx_to_string(n.inner) + ")";
            else if constexpr (std::is_same_v<T, XPromote>) return "promote(" + ctx_to_string(n.inner) + ")";
            else return "subst(" + ctx_to_string(n->base) + ")";
        },
        f->node);
}

// --- layering -----------------------------------------------------------------

ContextLayering context_layering(const CtxPtr& f) {
    const int k = f->dim;
    ContextLayering out;
    out.l.resize(static_cast<std::size_t>(k));
    out.r.resize(static_cast<std::size_t>(k));
    auto fill_boundaries = [&](int upto) {
        for (int i = 1; i <= upto; ++i) {
            out.l[static_cast<std::size_t>(i - 1)] = boundary_diagram(f->v, i - 1, Sign::Minus);
            out.r[static_cast<std::size_t>(i - 1)] = boundary_diagram(f->w, i - 1, Sign::Plus);
        }
    };
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, XIdentity>) {
                fill_boundaries(k);
            } else if constexpr (std::is_same_v<T, XLeftPaste>) {
                fill_boundaries(k - 1);
                out.l[static_cast<std::size_t>(k - 1)] = paste_diagrams_sub(n.u, f->v, k - 1, n.iota, true).whole;
                out.r[static_cast<std::size_t>(k - 1)] = f->w;
            } else if constexpr (std::is_same_v<T, XRightPaste>) {
                fill_boundaries(k - 1);
                out.l[static_cast<std::size_t>(k - 1)] = f->v;
                out.r[static_cast<std::size_t>(k - 1)] = paste_diagrams_sub(f->w, n.u, k - 1, n.iota, false).whole;
            } else if constexpr (std::is_same_v<T, XPromote>) {
                ContextLayering lower = context_layering(n.inner);
                for (int i = 1; i < k; ++i) {
                    out.l[static_cast<std::size_t>(i - 1)] = lower.l[static_cast<std::size_t>(i - 1)];
                    out.r[static_cast<std::size_t>(i - 1)] = lower.r[static_cast<std::size_t>(i - 1)];
                }
                out.l[static_cast<std::size_t>(k - 1)] = apply_ctx(n.inner, f->v);
                out.r[static_cast<std::size_t>(k - 1)] = apply_ctx(n.inner, f->w);
            } else if constexpr (std::is_same_v<T, XLeftWrap> || std::is_same_v<T, XRightWrap> ||
                                 std::is_same_v<T, std::shared_ptr<const XSubstAt>>) {
                fail(Err::Internal, "layering is not defined for wrap/substitution context nodes");
            } else {  // XCompose: wrap the inner pairs with the outer's lower
                      // chain, then paste the outer pair (distributivity of
                      // lower pastings over higher ones, absorption included)
                ContextLayering li = context_layering(n.inner);
                ContextLayering lo = context_layering(n.outer);
                auto wrap_below = [&](int level, Diagram x) {
                    for (int j = 1; j < level; ++j) {
                        x = paste_diagrams(lo.l[static_cast<std::size_t>(j - 1)], x, j - 1).whole;
                        x = paste_diagrams(x, lo.r[static_cast<std::size_t>(j - 1)], j - 1).whole;
                    }
                    return x;
                };
                for (int i = 1; i <= k; ++i) {
                    std::size_t ix = static_cast<std::size_t>(i - 1);
                    out.l[ix] = paste_diagrams(lo.l[ix], wrap_below(i, li.l[ix]), i - 1).whole;
                    out.r[ix] = paste_diagrams(wrap_below(i, li.r[ix]), lo.r[ix], i - 1).whole;
                }
            }
        },
        f->node);
    return out;
}

Diagram apply_layering(const ContextLayering& lay, const Diagram& a) {
    Diagram x = a;
    for (std::size_t i = 0; i < lay.l.size(); ++i) {
        int j = static_cast<int>(i);
        x = paste_diagrams(lay.l[i], x, j).whole;
        x = paste_diagrams(x, lay.r[i], j).whole;
    }
    return x;
}

Molecule context_shape(const CtxPtr& f) {
    require(f->v.round() && f->w.round(), Err::NotRound, "context shape needs a round pair");
    ContextLayering lay = context_layering(f);
    Molecule hole = cell_ext(f->v.shape(), f->w.shape()).whole;
    Molecule x = hole;
    for (std::size_t i = 0; i < lay.l.size(); ++i) {
        int j = static_cast<int>(i);
        x = paste(lay.l[i].shape(), x, j).whole;
        x = paste(x, lay.r[i].shape(), j).whole;
    }
    return x;
}

bool is_round_context(const CtxPtr& f) { return context_shape(f).is_round(); }

// --- trim factorisation ----------------------------------------------------------

namespace {

struct TrimLeaf {
    bool left;
    Diagram u;
    std::vector<int> iota;
    CertPtr cert;
    Diagram v, w;  // the pair the leaf acts on
};

// chain listed innermost (applied first) to outermost
struct FactorResult {
    std::vector<TrimLeaf> chain;
    CtxPtr lower;  // context on the boundary pair
};

FactorResult factor_rec(const CtxPtr& f) {
    return std::visit(
        [&](const auto& n) -> FactorResult {
            using T = std::decay_t<decltype(n)>;
            Diagram bv = boundary_diagram(f->v, Sign::Minus);
            Diagram bw = boundary_diagram(f->w, Sign::Plus);
            if constexpr (std::is_same_v<T, XIdentity>) {
                return {{}, ctx_identity(bv, bw)};
            } else if constexpr (std::is_same_v<T, XLeftPaste>) {
                return {{TrimLeaf{true, n.u, n.iota, n.cert, f->v, f->w}}, ctx_identity(bv, bw)};
            } else if constexpr (std::is_same_v<T, XRightPaste>) {
                return {{TrimLeaf{false, n.u, n.iota, n.cert, f->v, f->w}}, ctx_identity(bv, bw)};
            } else if constexpr (std::is_same_v<T, XPromote>) {
                return {{}, n.inner};
            } else if constexpr (std::is_same_v<T, XLeftWrap> || std::is_same_v<T, XRightWrap> ||
                                 std::is_same_v<T, std::shared_ptr<const XSubstAt>>) {
                fail(Err::Internal, "trim factorisation is not defined for wrap/substitution nodes");
            } else {
                FactorResult fi = factor_rec(n.inner);
                FactorResult fo = factor_rec(n.outer);
                // commute Promote(fi.lower is already inside fo's leaves? no:
                // F = T_o . P(G_o) . T_i . P(G_i); push P(G_o) inside T_i:
                // P(G_o) . Lp(u, iota on (v,w)) = Lp(u, iota') . P(G_o) with
                // iota' tracked through the hole embedding of G_o at v (or w).
                FactorResult out;
                out.chain = fi.chain;
                for (auto& leaf : out.chain) {
                    CtxApply cv = apply_context(fo.lower, leaf.v);
                    CtxApply cw = apply_context(fo.lower, leaf.w);
                    std::vector<int> iota2(leaf.u.size(), -1);
                    const auto& hole = leaf.left ? cv.hole_map : cw.hole_map;
                    for (std::size_t x = 0; x < leaf.iota.size(); ++x)
                        if (leaf.iota[x] >= 0) iota2[x] = hole[static_cast<std::size_t>(leaf.iota[x])];
                    leaf.iota = std::move(iota2);
                    leaf.v = cv.result;
                    leaf.w = cw.result;
                }
                for (const auto& leaf : fo.chain) out.chain.push_back(leaf);
                if (std::holds_alternative<XIdentity>(fi.lower->node))
                    out.lower = fo.lower;
                else if (std::holds_alternative<XIdentity>(fo.lower->node))
                    out.lower = fi.lower;
                else
                    out.lower = ctx_compose(fo.lower, fi.lower);
                return out;
            }
        },
        f->node);
}

}  // namespace

TrimFactorisation trim_factorize(const CtxPtr& f) {
    require(f->dim > 1, Err::DimensionTooLow, "trim factorisation needs dimension > 1");
    FactorResult r = factor_rec(f);
    TrimFactorisation out;
    out.lower = r.lower;
    // the trim part acts on the pair produced by the promoted lower context
    Diagram pv = apply_ctx(r.lower, f->v);
    Diagram pw = apply_ctx(r.lower, f->w);
    CtxPtr t = ctx_identity(pv, pw);
    for (const auto& leaf : r.chain) {
        CtxPtr step = leaf.left ? ctx_left_paste(leaf.u, leaf.iota, leaf.v, leaf.w, leaf.cert)
                                : ctx_right_paste(leaf.u, leaf.iota, leaf.v, leaf.w, leaf.cert);
        t = std::holds_alternative<XIdentity>(t->node) ? step : ctx_compose(step, t);
    }
    out.trim = t;
    return out;
}

namespace {

struct SubdiagPaste {
    CtxApply app;
    std::vector<int> u_incl;  // cs.u elements inside the result
};

SubdiagPaste paste_context_subdiagram(const ContextSubdiagram& cs, const Diagram& a) {
    CtxApply inner = apply_context(cs.rest, a);
    const int k = inner.result.dim() - 1;
    Bitset bda = inner.result.shape().boundary_set(k, cs.u_on_left ? Sign::Minus : Sign::Plus);
    Bitset bu = cs.u.shape().boundary_set(cs.u_on_left ? Sign::Plus : Sign::Minus);
    SubDiagram bus = restrict_diagram(cs.u, bu);
    auto emb = embed_diagram_into(bus.diagram, inner.result, bda);
    require(emb.has_value(), Err::TypeMismatch, "context subdiagram does not paste");
    std::vector<int> iota(cs.u.size(), -1);
    for (std::size_t x = 0; x < bus.old_of_new.size(); ++x)
        iota[static_cast<std::size_t>(bus.old_of_new[x])] = (*emb)[x];
    DiagPasting p = cs.u_on_left ? paste_diagrams_sub(cs.u, inner.result, k, iota, true)
                                 : paste_diagrams_sub(inner.result, cs.u, k, iota, false);
    SubdiagPaste out;
    out.app.result = p.whole;
    const auto& hole_incl = cs.u_on_left ? p.incl_right : p.incl_left;
    out.app.hole_map.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.app.hole_map[i] = hole_incl[static_cast<std::size_t>(inner.hole_map[i])];
    out.u_incl = cs.u_on_left ? p.incl_left : p.incl_right;
    return out;
}

}  // namespace

CtxApply apply_context_subdiagram(const ContextSubdiagram& cs, const Diagram& a) {
    return paste_context_subdiagram(cs, a).app;
}

Bitset context_subdiagram_at(const ContextSubdiagram& cs, const Diagram& a) {
    SubdiagPaste p = paste_context_subdiagram(cs, a);
    Bitset out(p.app.result.size());
    for (int x : cs.sub.to_vector()) out.set(static_cast<std::size_t>(p.u_incl[static_cast<std::size_t>(x)]));
    return out;
}

CtxPtr rounded_context(const CtxPtr& f, const std::vector<std::pair<Diagram, Diagram>>& chain) {
    CtxPtr r = f;
    for (const auto& [a, b] : chain) {
        require(parallel(a, b), Err::ChainMismatch, "rounding chain must consist of parallel pairs");
        require(diagram_equal(boundary_diagram(a, Sign::Minus), r->v) &&
                    diagram_equal(boundary_diagram(a, Sign::Plus), r->w),
                Err::ChainMismatch, "rounding chain must descend to the context pair");
        Diagram rb = apply_ctx(r, b);
        CtxPtr promoted = ctx_promote(r, a, b);
        StructCell eps = unit(rb);
        // right-paste eps(Rb) along the identity position of Rb
        std::vector<int> iota(eps.w.diagram.size(), -1);
        Bitset cap = eps.w.diagram.shape().boundary_set(Sign::Minus);
        for (std::size_t e = 0; e < eps.w.diagram.size(); ++e)
            if (cap.get(e)) iota[e] = eps.cyl.tau.assign[e];
        CtxPtr pad = ctx_right_paste(eps.w.diagram, iota, promoted->cod_v, promoted->cod_w,
                                     cert_degeneracy(eps.w));
        r = ctx_compose(pad, promoted);
    }
    return r;
}

bool contexts_agree_on(const CtxPtr& f, const CtxPtr& g, const std::vector<Diagram>& samples) {
    for (const auto& a : samples)
        if (!diagram_equal(apply_ctx(f, a), apply_ctx(g, a))) return false;
    return true;
}

}  // namespace dsets
