#include "dsets/equivcalc.hpp"

#include <algorithm>

namespace dsets {

namespace {

template <class T>
CertPtr mk(T node) {
    auto c = std::make_shared<EquivCert>();
    c->node = std::move(node);
    return c;
}

}  // namespace

CertPtr cert_degeneracy(DegeneracyWitness w) { return mk(CDegeneracy{std::move(w)}); }
CertPtr cert_assumed(std::string tag) { return mk(CAssumed{std::move(tag)}); }
CertPtr cert_weak_inverse(Diagram inverse, Diagram z, CertPtr zc, Diagram h, CertPtr hc) {
    return mk(CWeakInverse{std::move(inverse), std::move(z), std::move(zc), std::move(h), std::move(hc)});
}
CertPtr cert_bi_inverse(Diagram l, Diagram r, Diagram z, CertPtr zc, Diagram h, CertPtr hc) {
    return mk(CBiInverse{std::move(l), std::move(r), std::move(z), std::move(zc), std::move(h), std::move(hc)});
}
CertPtr cert_compose(Diagram left, CertPtr leftc, Diagram right, CertPtr rightc, PastePos pos) {
    CCompose n;
    n.left = std::move(left);
    n.right = std::move(right);
    n.leftc = std::move(leftc);
    n.rightc = std::move(rightc);
    n.pos = std::move(pos);
    return mk(std::move(n));
}
CertPtr cert_divide(Diagram mediator, CertPtr medc, Diagram other, CertPtr otherc, Diagram whole, CertPtr wholec,
                    PastePos pos, bool e_on_left) {
    return mk(CDivide{std::move(mediator), std::move(medc), std::move(other), std::move(whole), std::move(otherc),
                      std::move(wholec), std::move(pos), e_on_left});
}

int cert_depth(const CertPtr& c) {
    if (!c) return 0;
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, CDegeneracy> || std::is_same_v<T, CAssumed>) {
                return 0;
            } else if constexpr (std::is_same_v<T, CWeakInverse> || std::is_same_v<T, CBiInverse>) {
                return 1 + std::max(cert_depth(n.zc), cert_depth(n.hc));
            } else if constexpr (std::is_same_v<T, CCompose>) {
                return 1 + std::max(cert_depth(n.leftc), cert_depth(n.rightc));
            } else {
                return 1 + std::max({cert_depth(n.medc), cert_depth(n.otherc), cert_depth(n.wholec)});
            }
        },
        c->node);
}

Diagram rebuild_pasting(const Diagram& left, const Diagram& right, const PastePos& pos) {
    if (pos.iota.empty()) return paste_diagrams(left, right, pos.k).whole;
    return paste_diagrams_sub(left, right, pos.k, pos.iota, pos.side_left).whole;
}

// --- checking ------------------------------------------------------------------

namespace {

struct Checker {
    int assume_mode;
    CheckResult fail_at(const std::string& path, const std::string& why) {
        return {Verdict::Rejected, path + ": " + why};
    }

    CheckResult run(const Diagram& e, const CertPtr& c, int budget, const std::string& path) {
        if (!c) return fail_at(path, "missing certificate");
        if (!e.valid() || e.dim() == 0) return fail_at(path, "certificates apply to positive-dimensional diagrams");
        if (!e.round()) return fail_at(path, "certificates apply to round diagrams");
        return std::visit([&](const auto& n) { return node(e, n, budget, path); }, c->node);
    }

    CheckResult node(const Diagram& e, const CDegeneracy& n, int, const std::string& path) {
        if (!diagram_equal(n.w.diagram, e)) return fail_at(path, "degeneracy witness is for a different diagram");
        if (!witness_valid(n.w)) return fail_at(path, "invalid degeneracy witness");
        return {Verdict::Accepted, ""};
    }

    CheckResult node(const Diagram&, const CAssumed& n, int, const std::string& path) {
        if (assume_mode) return {Verdict::AcceptedWithAssumptions, ""};
        return fail_at(path, "assumed leaf '" + n.tag + "' outside assumption mode");
    }

    CheckResult recurse(const Diagram& e, const CertPtr& c, int budget, const std::string& path) {
        if (budget <= 0) return {Verdict::BudgetExhausted, path + ": depth budget exhausted"};
        return run(e, c, budget - 1, path);
    }

    CheckResult merge(CheckResult a, const CheckResult& b) {
        if (a.verdict == Verdict::Rejected || a.verdict == Verdict::BudgetExhausted) return a;
        if (b.verdict == Verdict::Rejected || b.verdict == Verdict::BudgetExhausted) return b;
        if (b.verdict == Verdict::AcceptedWithAssumptions) a.verdict = Verdict::AcceptedWithAssumptions;
        return a;
    }

    CheckResult invertor_types(const Diagram& e, const Diagram& inv, const Diagram& z, const Diagram& h,
                               const std::string& path) {
        if (!parallel_flip(e, inv)) return fail_at(path, "inverse has the wrong type");
        Diagram ee = paste_top(e, inv).whole;
        if (!diagram_equal(boundary_diagram(z, Sign::Minus), ee))
            return fail_at(path, "left invertor input is not e # e*");
        Diagram eu = unit(boundary_diagram(e, Sign::Minus)).w.diagram;
        if (!diagram_equal(boundary_diagram(z, Sign::Plus), eu))
            return fail_at(path, "left invertor output is not the unit on the input");
        Diagram ee2 = paste_top(inv, e).whole;
        if (!diagram_equal(boundary_diagram(h, Sign::Plus), ee2))
            return fail_at(path, "right invertor output is not e* # e");
        Diagram ev = unit(boundary_diagram(e, Sign::Plus)).w.diagram;
        if (!diagram_equal(boundary_diagram(h, Sign::Minus), ev))
            return fail_at(path, "right invertor input is not the unit on the output");
        return {Verdict::Accepted, ""};
    }

    static bool parallel_flip(const Diagram& e, const Diagram& inv) {
        return e.dim() == inv.dim() &&
               diagram_equal(boundary_diagram(e, Sign::Minus), boundary_diagram(inv, Sign::Plus)) &&
               diagram_equal(boundary_diagram(e, Sign::Plus), boundary_diagram(inv, Sign::Minus));
    }

    CheckResult node(const Diagram& e, const CWeakInverse& n, int budget, const std::string& path) {
        auto t = invertor_types(e, n.inverse, n.z, n.h, path);
        if (t.verdict != Verdict::Accepted) return t;
        return merge(recurse(n.z, n.zc, budget, path + "/z"), recurse(n.h, n.hc, budget, path + "/h"));
    }

    CheckResult node(const Diagram& e, const CBiInverse& n, int budget, const std::string& path) {
        if (!parallel_flip(e, n.left_inv) || !parallel_flip(e, n.right_inv))
            return fail_at(path, "bi-inverse has the wrong type");
        if (!parallel(n.left_inv, n.right_inv)) return fail_at(path, "left and right inverses not parallel");
        Diagram ee = paste_top(e, n.left_inv).whole;
        if (!diagram_equal(boundary_diagram(n.z, Sign::Minus), ee)) return fail_at(path, "z input is not e # e^L");
        Diagram eu = unit(boundary_diagram(e, Sign::Minus)).w.diagram;
        if (!diagram_equal(boundary_diagram(n.z, Sign::Plus), eu)) return fail_at(path, "z output mismatch");
        Diagram ee2 = paste_top(n.right_inv, e).whole;
        if (!diagram_equal(boundary_diagram(n.h, Sign::Plus), ee2)) return fail_at(path, "h output is not e^R # e");
        Diagram ev = unit(boundary_diagram(e, Sign::Plus)).w.diagram;
        if (!diagram_equal(boundary_diagram(n.h, Sign::Minus), ev)) return fail_at(path, "h input mismatch");
        return merge(recurse(n.z, n.zc, budget, path + "/z"), recurse(n.h, n.hc, budget, path + "/h"));
    }

    CheckResult node(const Diagram& e, const CCompose& n, int budget, const std::string& path) {
        Diagram built;
        try {
            built = rebuild_pasting(n.left, n.right, n.pos);
        } catch (const KernelError& err) {
            return fail_at(path, std::string("compose position invalid: ") + err.what());
        }
        if (!diagram_equal(built, e)) return fail_at(path, "composite does not equal the certified diagram");
        return merge(recurse(n.left, n.leftc, budget, path + "/left"),
                     recurse(n.right, n.rightc, budget, path + "/right"));
    }

    CheckResult node(const Diagram& e, const CDivide& n, int budget, const std::string& path) {
        Diagram built;
        try {
            built = n.e_on_left ? rebuild_pasting(e, n.other, n.pos) : rebuild_pasting(n.other, e, n.pos);
        } catch (const KernelError& err) {
            return fail_at(path, std::string("divide position invalid: ") + err.what());
        }
        if (!diagram_equal(boundary_diagram(n.mediator, Sign::Minus), built))
            return fail_at(path, "mediator input does not paste e with the co-factor");
        if (!diagram_equal(boundary_diagram(n.mediator, Sign::Plus), n.whole))
            return fail_at(path, "mediator output is not the certified whole");
        auto r = merge(recurse(n.mediator, n.medc, budget, path + "/mediator"),
                       recurse(n.other, n.otherc, budget, path + "/other"));
        return merge(std::move(r), recurse(n.whole, n.wholec, budget, path + "/whole"));
    }
};

}  // namespace

CheckResult check_cert(const Diagram& e, const CertPtr& c, int depth_budget, bool assume_mode) {
    Checker ch{assume_mode};
    return ch.run(e, c, depth_budget, "cert");
}

// --- construction ------------------------------------------------------------------

CertPtr cert_for_degenerate(const DegeneracyWitness& w) {
    require(witness_valid(w), Err::NotDegenerate, "cert_for_degenerate needs a valid witness");
    require(w.diagram.round(), Err::NotRound, "cert_for_degenerate needs a round diagram");
    return cert_degeneracy(w);
}

CertPtr expand_degeneracy(const CertPtr& c) {
    const auto* d = std::get_if<CDegeneracy>(&c->node);
    require(d != nullptr, Err::UnsupportedCert, "expand_degeneracy expects a degeneracy certificate");
    StructCell z = left_invertor(d->w);
    StructCell h = right_invertor(d->w);
    Diagram inv = reverse_witness(d->w).diagram;
    return cert_weak_inverse(inv, z.w.diagram, cert_degeneracy(z.w), h.w.diagram, cert_degeneracy(h.w));
}

Equiv extract_inverse(const Diagram& e, const CertPtr& c) {
    require(c != nullptr, Err::MissingInverse, "no certificate to extract an inverse from");
    if (const auto* d = std::get_if<CDegeneracy>(&c->node)) {
        DegeneracyWitness r = reverse_witness(d->w);
        return {r.diagram, cert_degeneracy(r)};
    }
    if (const auto* wi = std::get_if<CWeakInverse>(&c->node)) {
        // e* is certified by dividing z : e # e* => eps(bd^- e)
        Diagram eu = unit(boundary_diagram(e, Sign::Minus)).w.diagram;
        CertPtr inv_cert = cert_divide(wi->z, wi->zc, e, c, eu, cert_degeneracy(unit(boundary_diagram(e, Sign::Minus)).w),
                                       PastePos{e.dim() - 1, {}, true}, false);
        return {wi->inverse, inv_cert};
    }
    if (const auto* cp = std::get_if<CCompose>(&c->node)) {
        if (!cp->pos.iota.empty())
            fail(Err::MissingInverse, "inverse extraction for subdiagram pastings is not supported");
        Equiv ir = extract_inverse(cp->right, cp->rightc);
        Equiv il = extract_inverse(cp->left, cp->leftc);
        return paste_equivs(ir, il, PastePos{cp->pos.k, {}, true});
    }
    if (const auto* dv = std::get_if<CDivide>(&c->node)) {
        (void)dv;
        fail(Err::MissingInverse, "divide certificates carry no canonical inverse");
    }
    fail(Err::MissingInverse, "no inverse extractable from this certificate");
}

CertPtr cert_transport(const Diagram& e, const Equiv& bridge, const Equiv& t) {
    // bridge : e => t, t certified  ==>  e certified
    require(diagram_equal(boundary_diagram(bridge.d, Sign::Minus), e), Err::TypeMismatch,
            "transport bridge must start at the certified diagram");
    require(diagram_equal(boundary_diagram(bridge.d, Sign::Plus), t.d), Err::TypeMismatch,
            "transport bridge must end at the certified target");
    StructCell lam = left_unitor(e, e.shape().boundary_set(Sign::Minus));
    DegeneracyWitness rl = reverse_witness(lam.w);
    Diagram mediator = paste_top(rl.diagram, bridge.d).whole;
    CertPtr medc = cert_compose(rl.diagram, cert_degeneracy(rl), bridge.d, bridge.cert,
                                PastePos{bridge.d.dim() - 1, {}, true});
    Diagram eps_in = unit(boundary_diagram(e, Sign::Minus)).w.diagram;
    CertPtr epsc = cert_degeneracy(unit(boundary_diagram(e, Sign::Minus)).w);
    return cert_divide(mediator, medc, eps_in, epsc, t.d, t.cert, PastePos{e.dim() - 1, {}, true}, false);
}

// --- lax solutions --------------------------------------------------------------------

namespace {

// iota identifying the cylinder over a base subset with the matching part of
// another cylinder, copy type by copy type. from_sub: base elements of the
// source cylinder; to: parent elements they correspond to in the target
// cylinder's base.
std::vector<int> match_cylinders(const Cylinder& from, const std::vector<int>& base_map, const Cylinder& to,
                                 const Bitset& from_part) {
    std::vector<int> iota(from.cyl.size(), -1);
    for (std::size_t e = 0; e < from.cyl.size(); ++e) {
        if (!from_part.get(e)) continue;
        int x = from.tau.assign[e];
        int y = base_map[static_cast<std::size_t>(x)];
        require(y >= 0, Err::Internal, "match_cylinders: unmapped base element");
        int copy_type = -1;  // 0 bot, 1 top, 2 mid, 3 at_k
        if (from.at_k[static_cast<std::size_t>(x)] == static_cast<int>(e)) copy_type = 3;
        else
            for (int t = 0; t < 3; ++t)
                if (from.copies[static_cast<std::size_t>(x)][t] == static_cast<int>(e)) copy_type = t;
        require(copy_type >= 0, Err::Internal, "match_cylinders: element not in copy tables");
        int target;
        if (copy_type == 3) {
            target = to.at_k[static_cast<std::size_t>(y)];
            require(target >= 0, Err::Internal, "match_cylinders: K parts disagree");
        } else {
            require(to.at_k[static_cast<std::size_t>(y)] < 0, Err::Internal, "match_cylinders: K parts disagree");
            target = to.copies[static_cast<std::size_t>(y)][copy_type];
        }
        iota[e] = target;
    }
    return iota;
}

}  // namespace

LaxSolution solve_lax(const Equiv& e, const EquationSpec& eq) {
    const Diagram& u = eq.u;
    require(e.d.valid() && u.valid() && e.d.dim() == u.dim(), Err::IllFormedEquation,
            "equation sides must be diagrams of equal dimension");
    const int n = e.d.dim();
    Sign side = eq.left_side ? Sign::Minus : Sign::Plus;

    // the boundary subdiagram j : bd^side e => bd^side u
    Bitset e_bd = e.d.shape().boundary_set(side);
    Bitset j_image(u.size());
    for (std::size_t x = 0; x < eq.j.size(); ++x) {
        bool on = e_bd.get(x);
        require(on == (eq.j[x] >= 0), Err::IllFormedEquation, "equation subdiagram must cover the boundary");
        if (eq.j[x] >= 0) {
            require(u.label(eq.j[x]) == e.d.label(static_cast<int>(x)), Err::IllFormedEquation,
                    "equation subdiagram must preserve labels");
            j_image.set(static_cast<std::size_t>(eq.j[x]));
        }
    }
    require(j_image.subset_of(u.shape().boundary_set(side)), Err::IllFormedEquation,
            "equation subdiagram must land in the matching boundary of u");

    // materials: the inverse of e and its invertor towards the relevant unit
    Diagram inv;
    Diagram zdiag;  // left: z : e # e* => eps(bd^- e); right: h : eps(bd^+ e) => e* # e
    CertPtr zcert;
    if (const auto* d = std::get_if<CDegeneracy>(&e.cert->node)) {
        inv = reverse_witness(d->w).diagram;
        StructCell sc = eq.left_side ? left_invertor(d->w) : right_invertor(d->w);
        zdiag = sc.w.diagram;
        zcert = cert_degeneracy(sc.w);
    } else if (const auto* wi = std::get_if<CWeakInverse>(&e.cert->node)) {
        inv = wi->inverse;
        zdiag = eq.left_side ? wi->z : wi->h;
        zcert = eq.left_side ? wi->zc : wi->hc;
    } else if (const auto* bi = std::get_if<CBiInverse>(&e.cert->node)) {
        inv = eq.left_side ? bi->left_inv : bi->right_inv;
        zdiag = eq.left_side ? bi->z : bi->h;
        zcert = eq.left_side ? bi->zc : bi->hc;
    } else {
        fail(Err::UnsupportedCert, "solve_lax needs a degeneracy or (bi-)invertibility certificate");
    }

    if (eq.left_side) {
        // u' = e* #_j u ; h = z #(eps part) rev(lambda_j u) ; h* = lambda_j u #(eps part) rev(z)
        Diagram uprime = paste_diagrams_sub(inv, u, n - 1, eq.j, true).whole;
        StructCell lam = left_unitor(u, j_image);
        DegeneracyWitness rlam = reverse_witness(lam.w);

        // position of eps(bd^- e) inside rev(lambda): the cylinder part over the
        // subdiagram image
        StructCell eps = unit(boundary_diagram(e.d, side));
        Bitset z_out = zdiag.shape().boundary_set(Sign::Plus);
        // base map: elements of bd^- e -> elements of u via j, through the eps
        // cylinder over bd^- e
        SubDiagram bd_e = restrict_diagram(e.d, e_bd);
        std::vector<int> base_map(bd_e.diagram.size(), -1);
        for (std::size_t k = 0; k < bd_e.old_of_new.size(); ++k)
            base_map[k] = eq.j[static_cast<std::size_t>(bd_e.old_of_new[k])];
        std::vector<int> pos_iota = match_cylinders(eps.cyl, base_map, lam.cyl, eps.w.diagram.shape().all());
        // embed eps(bd e) -> rev(lambda) ids are the lambda ids themselves
        // pasting z onto rev(lambda) at that subdiagram:
        // first identify bd^+ z with the eps part via its unique iso
        auto emb = embed_diagram_into(restrict_diagram(zdiag, z_out).diagram, rlam.diagram, [&] {
            Bitset part(rlam.diagram.size());
            for (int t : pos_iota)
                if (t >= 0) part.set(static_cast<std::size_t>(t));
            return part;
        }());
        require(emb.has_value(), Err::Internal, "solve_lax: invertor target does not match the unitor padding");
        SubDiagram zsub = restrict_diagram(zdiag, z_out);
        std::vector<int> iota(zdiag.size(), -1);
        for (std::size_t k = 0; k < zsub.old_of_new.size(); ++k)
            iota[static_cast<std::size_t>(zsub.old_of_new[k])] = (*emb)[k];
        Diagram h = paste_diagrams_sub(zdiag, rlam.diagram, n, iota, true).whole;
        CertPtr hc = cert_compose(zdiag, zcert, rlam.diagram, cert_degeneracy(rlam), PastePos{n, iota, true});

        // colax: lambda #(eps part) rev(z)
        DegeneracyWitness rz_w;  // rev z only exists as a witness for degeneracies
        Diagram rz;
        CertPtr rzc;
        if (const auto* d = std::get_if<CDegeneracy>(&zcert->node)) {
            rz_w = reverse_witness(d->w);
            rz = rz_w.diagram;
            rzc = cert_degeneracy(rz_w);
        } else {
            Equiv s = extract_inverse(zdiag, zcert);
            rz = s.d;
            rzc = s.cert;
        }
        Bitset rz_in = rz.shape().boundary_set(Sign::Minus);
        auto emb2 = embed_diagram_into(restrict_diagram(rz, rz_in).diagram, lam.w.diagram, [&] {
            Bitset part(lam.w.diagram.size());
            for (int t : pos_iota)
                if (t >= 0) part.set(static_cast<std::size_t>(t));
            return part;
        }());
        require(emb2.has_value(), Err::Internal, "solve_lax: colax invertor source does not match the padding");
        SubDiagram rzsub = restrict_diagram(rz, rz_in);
        std::vector<int> iota2(rz.size(), -1);
        for (std::size_t k = 0; k < rzsub.old_of_new.size(); ++k)
            iota2[static_cast<std::size_t>(rzsub.old_of_new[k])] = (*emb2)[k];
        Diagram hstar = paste_diagrams_sub(lam.w.diagram, rz, n, iota2, false).whole;
        CertPtr hstarc = cert_compose(lam.w.diagram, cert_degeneracy(lam.w), rz, rzc, PastePos{n, iota2, false});

        // type check: h : e #_i u' => u
        Diagram expected;
        {
            // e pasted onto u' at the image of bd^+ e inside u'
            DiagPasting up = paste_diagrams_sub(inv, u, n - 1, eq.j, true);
            Bitset inv_out = inv.shape().boundary_set(Sign::Plus);
            std::vector<int> iota3(e.d.size(), -1);
            Bitset e_out = e.d.shape().boundary_set(Sign::Plus);
            // bd^+ e = bd^- (e*) sits inside u' as the image of inv's input
            SubDiagram eout = restrict_diagram(e.d, e_out);
            Bitset inv_in = inv.shape().boundary_set(Sign::Minus);
            SubDiagram invin = restrict_diagram(inv, inv_in);
            auto m = find_isomorphism(eout.diagram.shape().poset(), invin.diagram.shape().poset());
            require(m.has_value(), Err::Internal, "solve_lax: inverse boundaries out of sync");
            for (std::size_t k = 0; k < eout.old_of_new.size(); ++k) {
                int invid = invin.old_of_new[static_cast<std::size_t>(m->assign[k])];
                iota3[static_cast<std::size_t>(eout.old_of_new[k])] = up.incl_left[static_cast<std::size_t>(invid)];
            }
            expected = paste_diagrams_sub(e.d, up.whole, n - 1, iota3, true).whole;
            (void)inv_out;
        }
        require(diagram_equal(boundary_diagram(h, Sign::Minus), expected), Err::TypeMismatch,
                "lax solution has the wrong input boundary");
        require(diagram_equal(boundary_diagram(h, Sign::Plus), u), Err::TypeMismatch,
                "lax solution has the wrong output boundary");
        require(diagram_equal(boundary_diagram(hstar, Sign::Minus), u), Err::TypeMismatch,
                "colax solution has the wrong input boundary");
        require(diagram_equal(boundary_diagram(hstar, Sign::Plus), expected), Err::TypeMismatch,
                "colax solution has the wrong output boundary");
        return {uprime, {h, hc}, {hstar, hstarc}};
    }

    // right-side equation x #_i e = u: u' = u #_j e*, lax solution
    //   h = hL #(eps part) rho_j u : (u #_j e*) # e => u
    // where hL : e* # e => eps v inverts the right-invertor material.
    Diagram uprime = paste_diagrams_sub(u, inv, n - 1, eq.j, false).whole;
    StructCell rho = right_unitor(u, j_image);

    Diagram hL;
    CertPtr hLc;
    if (const auto* d = std::get_if<CDegeneracy>(&zcert->node)) {
        DegeneracyWitness rw = reverse_witness(d->w);
        hL = rw.diagram;
        hLc = cert_degeneracy(rw);
    } else {
        Equiv s = extract_inverse(zdiag, zcert);
        hL = s.d;
        hLc = s.cert;
    }

    // the eps part of rho's input boundary: the cylinder elements over the
    // subdiagram image that lie on the input of the unitor
    Bitset eps_part(rho.w.diagram.size());
    {
        Bitset over = cyl_over(rho.cyl, j_image);
        Bitset in_bd = rho.w.diagram.shape().boundary_set(Sign::Minus);
        Bitset base_copy = cyl_copy_subset(rho.cyl, Sign::Minus);
        for (std::size_t t = 0; t < rho.w.diagram.size(); ++t)
            if (over.get(t) && in_bd.get(t) && !base_copy.get(t)) eps_part.set(t);
        // the eps part shares its boundary with the base copy: add the shared
        // closure so it forms the full eps v subshape
        eps_part = rho.w.diagram.shape().poset()->closure(eps_part);
    }
    Bitset hL_out = hL.shape().boundary_set(Sign::Plus);
    auto emb = embed_diagram_into(restrict_diagram(hL, hL_out).diagram, rho.w.diagram, eps_part);
    require(emb.has_value(), Err::Internal, "solve_lax: inverted invertor target does not match the padding");
    SubDiagram hLsub = restrict_diagram(hL, hL_out);
    std::vector<int> iota(hL.size(), -1);
    for (std::size_t k = 0; k < hLsub.old_of_new.size(); ++k)
        iota[static_cast<std::size_t>(hLsub.old_of_new[k])] = (*emb)[k];
    Diagram h = paste_diagrams_sub(hL, rho.w.diagram, n, iota, true).whole;
    CertPtr hc = cert_compose(hL, hLc, rho.w.diagram, cert_degeneracy(rho.w), PastePos{n, iota, true});

    // colax: rev(rho_j u) #(eps part) zdiag : u => (u #_j e*) # e
    DegeneracyWitness rrho = reverse_witness(rho.w);
    Bitset z_in = zdiag.shape().boundary_set(Sign::Minus);
    // the eps part of rev(rho)'s output boundary occupies the same element ids
    auto emb2 = embed_diagram_into(restrict_diagram(zdiag, z_in).diagram, rrho.diagram, eps_part);
    require(emb2.has_value(), Err::Internal, "solve_lax: colax padding mismatch");
    SubDiagram zsub = restrict_diagram(zdiag, z_in);
    std::vector<int> iota2(zdiag.size(), -1);
    for (std::size_t k = 0; k < zsub.old_of_new.size(); ++k)
        iota2[static_cast<std::size_t>(zsub.old_of_new[k])] = (*emb2)[k];
    Diagram hstar = paste_diagrams_sub(rrho.diagram, zdiag, n, iota2, false).whole;
    CertPtr hstarc = cert_compose(rrho.diagram, cert_degeneracy(rrho), zdiag, zcert, PastePos{n, iota2, false});

    Diagram expected;
    {
        DiagPasting up = paste_diagrams_sub(u, inv, n - 1, eq.j, false);
        Bitset e_in = e.d.shape().boundary_set(Sign::Minus);
        SubDiagram ein = restrict_diagram(e.d, e_in);
        Bitset inv_out = inv.shape().boundary_set(Sign::Plus);
        SubDiagram invout = restrict_diagram(inv, inv_out);
        auto m = find_isomorphism(ein.diagram.shape().poset(), invout.diagram.shape().poset());
        require(m.has_value(), Err::Internal, "solve_lax: inverse boundaries out of sync");
        std::vector<int> iota3(e.d.size(), -1);
        for (std::size_t k = 0; k < ein.old_of_new.size(); ++k) {
            int invid = invout.old_of_new[static_cast<std::size_t>(m->assign[k])];
            iota3[static_cast<std::size_t>(ein.old_of_new[k])] = up.incl_right[static_cast<std::size_t>(invid)];
        }
        expected = paste_diagrams_sub(up.whole, e.d, n - 1, iota3, false).whole;
    }
    require(diagram_equal(boundary_diagram(h, Sign::Minus), expected), Err::TypeMismatch,
            "lax solution has the wrong input boundary");
    require(diagram_equal(boundary_diagram(h, Sign::Plus), u), Err::TypeMismatch,
            "lax solution has the wrong output boundary");
    return {uprime, {h, hc}, {hstar, hstarc}};
}

// --- combinators ----------------------------------------------------------------------

Equiv refl(const Diagram& u) {
    StructCell e = unit(u);
    return {e.w.diagram, cert_degeneracy(e.w)};
}

Equiv paste_equivs(const Equiv& a, const Equiv& b, const PastePos& pos) {
    Diagram d = rebuild_pasting(a.d, b.d, pos);
    return {d, cert_compose(a.d, a.cert, b.d, b.cert, pos)};
}

Equiv trans(const Equiv& a, const Equiv& b) {
    return paste_equivs(a, b, PastePos{a.d.dim() - 1, {}, true});
}

Equiv sym(const Equiv& a) { return extract_inverse(a.d, a.cert); }

Equiv subdiag_equiv(const Diagram& u, const Bitset& vsub, const Equiv& h) {
    StructCell eu = unit(u);
    // h's input pastes onto the top copy of the subdiagram inside eps u
    SubDiagram v = restrict_diagram(u, vsub);
    Bitset h_in = h.d.shape().boundary_set(Sign::Minus);
    SubDiagram hin = restrict_diagram(h.d, h_in);
    auto m = find_isomorphism(hin.diagram.shape().poset(), v.diagram.shape().poset());
    require(m.has_value() , Err::TypeMismatch, "subdiag_equiv: h does not start at the subdiagram");
    for (std::size_t k = 0; k < hin.old_of_new.size(); ++k)
        require(hin.diagram.label(static_cast<int>(k)) == v.diagram.label(m->assign[k]), Err::TypeMismatch,
                "subdiag_equiv: label mismatch at the subdiagram");
    std::vector<int> iota(h.d.size(), -1);
    for (std::size_t k = 0; k < hin.old_of_new.size(); ++k) {
        int uid = v.old_of_new[static_cast<std::size_t>(m->assign[k])];
        int target = eu.cyl.at_k[static_cast<std::size_t>(uid)];
        if (target < 0) target = eu.cyl.copies[static_cast<std::size_t>(uid)][1];
        iota[static_cast<std::size_t>(hin.old_of_new[k])] = target;
    }
    Diagram d = paste_diagrams_sub(eu.w.diagram, h.d, u.dim(), iota, false).whole;
    return {d, cert_compose(eu.w.diagram, cert_degeneracy(eu.w), h.d, h.cert, PastePos{u.dim(), iota, false})};
}

Equiv all_top_equivalence(const Diagram& u, const std::map<int, CertPtr>& cell_certs) {
    const int n = u.dim();
    require(n > 0, Err::TypeMismatch, "all_top_equivalence needs positive dimension");
    auto layering = first_layering(u.shape(), n - 1);
    require(layering.has_value(), Err::Internal, "no top layering found");

    // eps(bd^- u) with the layers pasted on one at a time
    Diagram bdm = boundary_diagram(u, Sign::Minus);
    StructCell eps = unit(bdm);
    Equiv acc{eps.w.diagram, cert_degeneracy(eps.w)};

    for (int x : layering->order) {
        auto it = cell_certs.find(x);
        require(it != cell_certs.end(), Err::MissingCellCert,
                "missing certificate for top cell " + std::to_string(x));
        Bitset sx(u.size());
        sx.set(static_cast<std::size_t>(x));
        SubDiagram cell = restrict_diagram(u, u.shape().poset()->closure(sx));
        // paste the cell at its input inside the accumulated output boundary
        Diagram cin = boundary_diagram(cell.diagram, Sign::Minus);
        Bitset acc_out = acc.d.shape().boundary_set(Sign::Plus);
        auto emb = embed_diagram_into(cin, acc.d, acc_out);
        require(emb.has_value(), Err::Internal, "all_top_equivalence: cell input not on the frontier");
        std::vector<int> iota(cell.diagram.size(), -1);
        Bitset cin_set = cell.diagram.shape().boundary_set(Sign::Minus);
        SubDiagram cinr = restrict_diagram(cell.diagram, cin_set);
        for (std::size_t k = 0; k < cinr.old_of_new.size(); ++k)
            iota[static_cast<std::size_t>(cinr.old_of_new[k])] = (*emb)[k];
        acc = paste_equivs(acc, {cell.diagram, it->second}, PastePos{n - 1, iota, false});
    }

    // transport along lambda u : u => eps(bd^- u) # u, whose target is acc
    StructCell lam = left_unitor(u, u.shape().boundary_set(Sign::Minus));
    require(diagram_equal(boundary_diagram(lam.w.diagram, Sign::Plus), acc.d), Err::Internal,
            "all_top_equivalence: frontier pasting does not rebuild eps # u");
    return {u, cert_transport(u, {lam.w.diagram, cert_degeneracy(lam.w)}, acc)};
}

}  // namespace dsets
