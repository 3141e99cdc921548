#include "dsets/rich.hpp"

#include <algorithm>
#include <functional>
#include <cstdio>
#include <cstdlib>

namespace dsets {

Bitset incl_to_subset(const std::vector<int>& incl, std::size_t whole_size) {
    Bitset out(whole_size);
    for (int e : incl)
        if (e >= 0) out.set(static_cast<std::size_t>(e));
    return out;
}

RichEquiv::RichEquiv(Equiv e, std::function<Materials(const RichEquiv&)> make) {
    auto c = std::make_shared<Cell>();
    c->e = std::move(e);
    c->make = std::move(make);
    cell_ = std::move(c);
}

void RichEquiv::force() const {
    auto* c = const_cast<Cell*>(cell_.get());
    std::lock_guard<std::mutex> lk(c->mu);
    if (c->made) return;
    require(static_cast<bool>(c->make), Err::MissingInverse, "no invertibility materials for this equivalence");
    Materials m = c->make(*this);
    require(m.inverse && m.z && m.h, Err::MissingInverse, "incomplete invertibility materials");
    c->inverse.reset(m.inverse);
    c->z.reset(m.z);
    c->h.reset(m.h);
    c->made = true;
    c->make = nullptr;
}

RichEquiv RichEquiv::inverse() const {
    force();
    return *cell_->inverse;
}
RichEquiv RichEquiv::invertor_z() const {
    force();
    return *cell_->z;
}
RichEquiv RichEquiv::invertor_h() const {
    force();
    return *cell_->h;
}

const DegeneracyWitness* RichEquiv::witness() const {
    return cell_->witness ? &*cell_->witness : nullptr;
}

void RichEquiv::set_witness(DegeneracyWitness w) { const_cast<Cell*>(cell_.get())->witness = std::move(w); }

namespace {

Materials mats(RichEquiv inv, RichEquiv z, RichEquiv h) {
    return Materials{new RichEquiv(std::move(inv)), new RichEquiv(std::move(z)), new RichEquiv(std::move(h))};
}

// --- degeneracy witness algebra ------------------------------------------------

// Witness for a vertical composite of witnessed diagrams. The second factor's
// base is folded onto the first factor's base (or vice versa) through the map
// induced on the glued boundary; covers both equal-base composites and
// unit caps collapsing onto the other side.
std::optional<DegeneracyWitness> merge_one_way(const DegeneracyWitness& keep, const DegeneracyWitness& fold,
                                               const DiagPasting& glued, bool keep_left) {
    const auto& incl_keep = keep_left ? glued.incl_left : glued.incl_right;
    const auto& incl_fold = keep_left ? glued.incl_right : glued.incl_left;
    std::vector<int> q(glued.whole.size(), -1);
    for (std::size_t x = 0; x < keep.diagram.size(); ++x)
        q[static_cast<std::size_t>(incl_keep[x])] = keep.projection.assign[x];
    // base map derived on the glue: fold's boundary meets keep's image
    std::vector<int> m(fold.base.size(), -1);
    for (std::size_t y = 0; y < fold.diagram.size(); ++y) {
        int at = incl_fold[y];
        int tgt = q[static_cast<std::size_t>(at)];
        if (tgt < 0) continue;  // not on the glue
        int beta = fold.projection.assign[y];
        if (m[static_cast<std::size_t>(beta)] >= 0 && m[static_cast<std::size_t>(beta)] != tgt) return std::nullopt;
        m[static_cast<std::size_t>(beta)] = tgt;
    }
    for (int t : m)
        if (t < 0) return std::nullopt;  // glue does not surject onto the folded base
    for (std::size_t y = 0; y < fold.diagram.size(); ++y) {
        int tgt = m[static_cast<std::size_t>(fold.projection.assign[y])];
        int at = incl_fold[y];
        if (q[static_cast<std::size_t>(at)] >= 0 && q[static_cast<std::size_t>(at)] != tgt) return std::nullopt;
        q[static_cast<std::size_t>(at)] = tgt;
    }
    DegeneracyWitness w{glued.whole, MolMap{glued.whole.shape().poset(), keep.base.shape().poset(), q}, keep.base};
    if (!witness_valid(w)) {
        if (getenv("DSETS_TRACE")) fprintf(stderr, "merge_one_way: witness invalid (keep %zu fold %zu)\n", keep.diagram.size(), fold.diagram.size());
        return std::nullopt;
    }
    return w;
}

std::optional<DegeneracyWitness> merge_trans_witness(const DegeneracyWitness& a, const DegeneracyWitness& b,
                                                     const DiagPasting& glued) {
    if (auto w = merge_one_way(a, b, glued, true)) return w;
    return merge_one_way(b, a, glued, false);
}

// Witness for a pushforward component: the ambient collapse extended over the
// pushed diagram through its own witness and the gluing.
std::optional<DegeneracyWitness> merge_onto_witness(const DegeneracyWitness& amb, const DegeneracyWitness& hw,
                                                    const DiagPasting& glued) {
    std::vector<int> q(glued.whole.size(), -1);
    for (std::size_t x = 0; x < amb.diagram.size(); ++x)
        q[static_cast<std::size_t>(glued.incl_left[x])] = amb.projection.assign[x];
    std::vector<int> emb(hw.base.size(), -1);
    Bitset hin = hw.diagram.shape().boundary_set(Sign::Minus);
    for (std::size_t y = 0; y < hw.diagram.size(); ++y) {
        if (!hin.get(y)) continue;
        int base_elt = hw.projection.assign[y];
        int at = glued.incl_right[y];
        int tgt = q[static_cast<std::size_t>(at)];
        if (tgt < 0) return std::nullopt;
        if (emb[static_cast<std::size_t>(base_elt)] >= 0 && emb[static_cast<std::size_t>(base_elt)] != tgt)
            return std::nullopt;
        emb[static_cast<std::size_t>(base_elt)] = tgt;
    }
    for (int t : emb)
        if (t < 0) return std::nullopt;
    for (std::size_t y = 0; y < hw.diagram.size(); ++y) {
        int tgt = emb[static_cast<std::size_t>(hw.projection.assign[y])];
        int at = glued.incl_right[y];
        if (q[static_cast<std::size_t>(at)] >= 0 && q[static_cast<std::size_t>(at)] != tgt) return std::nullopt;
        q[static_cast<std::size_t>(at)] = tgt;
    }
    DegeneracyWitness w{glued.whole, MolMap{glued.whole.shape().poset(), amb.base.shape().poset(), q}, amb.base};
    if (!witness_valid(w)) return std::nullopt;
    return w;
}

// Backtracking completion of a partial collapse: assign the remaining
// elements of `whole` onto `base`, consistent with labels, dimensions and the
// faces of already-assigned elements, then validate the witness.
std::optional<DegeneracyWitness> search_witness(const Diagram& whole, std::vector<int> q, const Diagram& base) {
    std::vector<int> todo;
    for (std::size_t i = 0; i < whole.size(); ++i)
        if (q[i] < 0) todo.push_back(static_cast<int>(i));
    std::stable_sort(todo.begin(), todo.end(), [&](int x, int y) {
        return whole.shape().poset()->dim_of(x) < whole.shape().poset()->dim_of(y);
    });
    // downsets of the base for order checks
    std::vector<Bitset> down(base.size(), Bitset(base.size()));
    {
        std::vector<int> order(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
            return base.shape().poset()->dim_of(x) < base.shape().poset()->dim_of(y);
        });
        for (int x : order) {
            down[static_cast<std::size_t>(x)].set(static_cast<std::size_t>(x));
            for (int s2 = 0; s2 < 2; ++s2)
                for (int y : base.shape().poset()->faces(x, static_cast<Sign>(s2)))
                    down[static_cast<std::size_t>(x)] |= down[static_cast<std::size_t>(y)];
        }
    }
    std::function<bool(std::size_t)> dfs = [&](std::size_t pos) -> bool {
        if (pos == todo.size()) {
            DegeneracyWitness w{whole, MolMap{whole.shape().poset(), base.shape().poset(), q}, base};
            return witness_valid(w);
        }
        int x = todo[pos];
        for (std::size_t c = 0; c < base.size(); ++c) {
            int cand = static_cast<int>(c);
            if (base.label(cand) != whole.label(x)) continue;
            if (base.shape().poset()->dim_of(cand) > whole.shape().poset()->dim_of(x)) continue;
            bool ok = true;
            for (int s2 = 0; s2 < 2 && ok; ++s2)
                for (int y : whole.shape().poset()->faces(x, static_cast<Sign>(s2))) {
                    int qy = q[static_cast<std::size_t>(y)];
                    if (qy >= 0 && !down[c].get(static_cast<std::size_t>(qy))) {
                        ok = false;
                        break;
                    }
                }
            if (!ok) continue;
            q[static_cast<std::size_t>(x)] = cand;
            if (dfs(pos + 1)) return true;
            q[static_cast<std::size_t>(x)] = -1;
        }
        return false;
    };
    if (!dfs(0)) return std::nullopt;
    DegeneracyWitness w{whole, MolMap{whole.shape().poset(), base.shape().poset(), q}, base};
    return w;
}

// --- legs and recipes (for composites with no merged witness) -------------------

RichEquiv rich_subdiag_impl(const Diagram& big, const Bitset& vsub, const RichEquiv& h);
RichEquiv rich_onto(const DegeneracyWitness& ambient, const Bitset& glued, const RichEquiv& h);

struct Leg {
    RichEquiv step;
    Diagram next;
    std::vector<int> kept;
    std::vector<int> incl_new;
};

Leg leg(const Diagram& big, const Bitset& vsub_raw, const RichEquiv& conn) {
    Bitset vsub = big.shape().poset()->closure(vsub_raw);
    Leg out;
    out.step = rich_subdiag_impl(big, vsub, conn);
    Diagram repl = boundary_diagram(conn.d(), Sign::Plus);
    DiagSubstitution sub = substitute_diagram(big, repl, vsub);
    out.next = sub.whole;
    out.kept = sub.kept;
    out.incl_new = sub.incl_w;
    require(diagram_equal(boundary_diagram(out.step.d(), Sign::Plus), out.next), Err::Internal,
            "rewrite leg output does not match the substituted diagram");
    return out;
}

RichEquiv fold_legs(std::vector<RichEquiv> cells) {
    require(!cells.empty(), Err::Internal, "empty rewrite chain");
    RichEquiv acc = cells[0];
    for (std::size_t i = 1; i < cells.size(); ++i) acc = rich_trans(acc, cells[i]);
    return acc;
}

// Deletion: (x # y) # (y* # x*) => x # eps # x* => x # x* => eps(bd^- x).
RichEquiv delete_recipe(const RichEquiv& x, const RichEquiv& y) {
    const int n = x.d().dim();
    DiagPasting e = paste_diagrams(x.d(), y.d(), n - 1);
    DiagPasting estar = paste_diagrams(y.inverse().d(), x.inverse().d(), n - 1);
    DiagPasting w = paste_diagrams(e.whole, estar.whole, n - 1);

    Bitset pos1(w.whole.size());
    for (std::size_t t = 0; t < y.d().size(); ++t)
        pos1.set(static_cast<std::size_t>(w.incl_left[static_cast<std::size_t>(e.incl_right[t])]));
    for (std::size_t t = 0; t < y.inverse().d().size(); ++t)
        pos1.set(static_cast<std::size_t>(w.incl_right[static_cast<std::size_t>(estar.incl_left[t])]));
    Leg l1 = leg(w.whole, pos1, y.invertor_z());

    Bitset pos2(l1.next.size());
    for (std::size_t t = 0; t < x.d().size(); ++t)
        pos2.set(static_cast<std::size_t>(
            l1.kept[static_cast<std::size_t>(w.incl_left[static_cast<std::size_t>(e.incl_left[t])])]));
    for (int t : l1.incl_new)
        if (t >= 0) pos2.set(static_cast<std::size_t>(t));
    StructCell rho = right_unitor(x.d(), x.d().shape().boundary_set(Sign::Plus));
    Leg l2 = leg(l1.next, pos2, rich_degenerate(rho.w));

    RichEquiv zx = x.invertor_z();
    require(diagram_equal(l2.next, boundary_diagram(zx.d(), Sign::Minus)), Err::Internal,
            "delete recipe: residue is not x # x*");
    return fold_legs({l1.step, l2.step, zx});
}

// Insertion: eps(bd^+ y) => y* # y => y* # eps # y => y* # (x* # x) # y.
RichEquiv insert_recipe(const RichEquiv& x, const RichEquiv& y) {
    RichEquiv hy = y.invertor_h();
    DiagPasting p1 = paste_diagrams(y.inverse().d(), y.d(), y.d().dim() - 1);
    require(diagram_equal(boundary_diagram(hy.d(), Sign::Plus), p1.whole), Err::Internal,
            "insert recipe: invertor target out of shape");
    Bitset ybar_part = incl_to_subset(p1.incl_left, p1.whole.size());

    StructCell rho = right_unitor(y.inverse().d(), y.inverse().d().shape().boundary_set(Sign::Plus));
    Leg l2 = leg(p1.whole, ybar_part, rich_sym(rich_degenerate(rho.w)));

    Bitset eps_pos(l2.next.size());
    {
        StructCell eps = unit(boundary_diagram(y.inverse().d(), Sign::Plus));
        Bitset win = incl_to_subset(l2.incl_new, l2.next.size());
        auto emb = embed_diagram_into(eps.w.diagram, l2.next, win);
        require(emb.has_value(), Err::Internal, "insert recipe: inserted unit not found");
        for (int t : *emb) eps_pos.set(static_cast<std::size_t>(t));
    }
    Leg l3 = leg(l2.next, eps_pos, x.invertor_h());

    Diagram target =
        paste_diagrams(paste_diagrams(y.inverse().d(),
                                      paste_diagrams(x.inverse().d(), x.d(), x.d().dim() - 1).whole,
                                      x.d().dim() - 1)
                           .whole,
                       y.d(), y.d().dim() - 1)
            .whole;
    require(diagram_equal(l3.next, target), Err::Internal, "insert recipe: residue is not y* # x* # x # y");
    return fold_legs({hy, l2.step, l3.step});
}

// --- pushforward components ------------------------------------------------------

// positions in the ambient that the pushed input was glued onto
Bitset glued_positions(const Diagram& d0, const RichEquiv& h, const DiagPasting& e) {
    Bitset gl(d0.size());
    Bitset hinb = h.d().shape().boundary_set(Sign::Minus);
    std::vector<int> whole_to_amb(e.whole.size(), -1);
    for (std::size_t s = 0; s < d0.size(); ++s) whole_to_amb[static_cast<std::size_t>(e.incl_left[s])] = static_cast<int>(s);
    for (std::size_t t = 0; t < h.d().size(); ++t)
        if (hinb.get(t)) {
            int amb = whole_to_amb[static_cast<std::size_t>(e.incl_right[t])];
            require(amb >= 0, Err::Internal, "pushforward gluing out of the ambient");
            gl.set(static_cast<std::size_t>(amb));
        }
    return d0.shape().poset()->closure(gl);
}

RichEquiv rich_onto(const DegeneracyWitness& ambient, const Bitset& glued, const RichEquiv& h) {
    const Diagram& d0 = ambient.diagram;
    const int n = d0.dim();
    require(h.d().dim() == n, Err::TypeMismatch, "pushforward: pushed equivalence has the wrong dimension");

    Bitset hin = h.d().shape().boundary_set(Sign::Minus);
    SubDiagram hins = restrict_diagram(h.d(), hin);
    SubDiagram target = restrict_diagram(d0, glued);
    auto iso = find_isomorphism(hins.diagram.shape().poset(), target.diagram.shape().poset());
    require(iso.has_value(), Err::TypeMismatch,
            "pushforward does not start at the glued subdiagram (h input " + std::to_string(hins.diagram.size()) +
                " elts, target " + std::to_string(target.diagram.size()) + " elts)");
    std::vector<int> iota(h.d().size(), -1);
    for (std::size_t k = 0; k < hins.old_of_new.size(); ++k) {
        require(hins.diagram.label(static_cast<int>(k)) == target.diagram.label(iso->assign[k]), Err::TypeMismatch,
                "pushforward labels do not match at the glued subdiagram");
        iota[static_cast<std::size_t>(hins.old_of_new[k])] =
            target.old_of_new[static_cast<std::size_t>(iso->assign[k])];
    }
    DiagPasting e = paste_diagrams_sub(d0, h.d(), n - 1, iota, false);

    if (h.witness()) {
        auto merged = merge_onto_witness(ambient, *h.witness(), e);
        if (!merged) {
            std::vector<int> q(e.whole.size(), -1);
            for (std::size_t x = 0; x < d0.size(); ++x)
                q[static_cast<std::size_t>(e.incl_left[x])] = ambient.projection.assign[x];
            merged = search_witness(e.whole, q, ambient.base);
        }
        if (!merged)
            merged = search_witness(e.whole, std::vector<int>(e.whole.size(), -1),
                                    boundary_diagram(e.whole, Sign::Plus));
        if (!merged)
            merged = search_witness(e.whole, std::vector<int>(e.whole.size(), -1),
                                    boundary_diagram(e.whole, Sign::Minus));
        if (merged) return rich_degenerate(*merged);
        if (getenv("DSETS_TRACE"))
            fprintf(stderr, "merge_onto FAILED amb=%zu h=%zu\n", ambient.diagram.size(), h.d().size());
    }

    Equiv eq{e.whole, cert_compose(d0, cert_degeneracy(ambient), h.d(), h.cert(), PastePos{n - 1, iota, false})};
    RichEquiv hcopy = h;
    DegeneracyWitness amb = ambient;
    return RichEquiv(eq, [amb, hcopy, e](const RichEquiv&) {
        const Diagram& d0 = amb.diagram;
        const int n = d0.dim();
        Bitset gl = glued_positions(d0, hcopy, e);

        // inverse: h* pasted onto rev d0 at the same positions
        DegeneracyWitness rw = reverse_witness(amb);
        RichEquiv hbar = hcopy.inverse();
        Bitset hbout = hbar.d().shape().boundary_set(Sign::Plus);
        SubDiagram hbs = restrict_diagram(hbar.d(), hbout);
        SubDiagram tgt = restrict_diagram(rw.diagram, gl);
        auto iso2 = find_isomorphism(hbs.diagram.shape().poset(), tgt.diagram.shape().poset());
        require(iso2.has_value(), Err::Internal, "pushforward inverse does not reattach");
        std::vector<int> iota2(hbar.d().size(), -1);
        for (std::size_t k = 0; k < hbs.old_of_new.size(); ++k)
            iota2[static_cast<std::size_t>(hbs.old_of_new[k])] =
                tgt.old_of_new[static_cast<std::size_t>(iso2->assign[k])];
        DiagPasting estar = paste_diagrams_sub(hbar.d(), rw.diagram, n - 1, iota2, true);
        Equiv inv_eq{estar.whole,
                     cert_compose(hbar.d(), hbar.cert(), rw.diagram, cert_degeneracy(rw), PastePos{n - 1, iota2, true})};

        // z : e # e* => eps(bd^- d0)
        DiagPasting w = paste_diagrams(e.whole, estar.whole, n - 1);
        Bitset pos1(w.whole.size());
        for (std::size_t t = 0; t < hcopy.d().size(); ++t)
            pos1.set(static_cast<std::size_t>(w.incl_left[static_cast<std::size_t>(e.incl_right[t])]));
        for (std::size_t t = 0; t < hbar.d().size(); ++t)
            pos1.set(static_cast<std::size_t>(w.incl_right[static_cast<std::size_t>(estar.incl_left[t])]));
        Leg l1 = leg(w.whole, pos1, hcopy.invertor_z());

        Bitset pos2(l1.next.size());
        for (std::size_t t = 0; t < d0.size(); ++t)
            pos2.set(static_cast<std::size_t>(
                l1.kept[static_cast<std::size_t>(w.incl_left[static_cast<std::size_t>(e.incl_left[t])])]));
        for (int t : l1.incl_new)
            if (t >= 0) pos2.set(static_cast<std::size_t>(t));
        StructCell rho = right_unitor(d0, gl);
        Leg l2 = leg(l1.next, pos2, rich_degenerate(rho.w));
        StructCell zeta = left_invertor(amb);
        require(diagram_equal(l2.next, boundary_diagram(zeta.w.diagram, Sign::Minus)), Err::Internal,
                "pushforward delete recipe: residue is not d0 # rev d0");
        RichEquiv z = fold_legs({l1.step, l2.step, rich_degenerate(zeta.w)});

        // strict insertion materials need a witnessed pushed equivalence;
        // fail on demand otherwise
        RichEquiv hm(Equiv{}, nullptr);
        RichEquiv inv(inv_eq, nullptr);
        return mats(inv, z, hm);
    });
}

RichEquiv rich_subdiag_impl(const Diagram& big, const Bitset& vsub, const RichEquiv& h) {
    StructCell eps = unit(big);
    Bitset glued(eps.w.diagram.size());
    for (int x : vsub.to_vector()) {
        int t = eps.cyl.at_k[static_cast<std::size_t>(x)];
        if (t < 0) t = eps.cyl.copies[static_cast<std::size_t>(x)][1];
        glued.set(static_cast<std::size_t>(t));
    }
    glued = eps.w.diagram.shape().poset()->closure(glued);
    return rich_onto(eps.w, glued, h);
}

}  // namespace

RichEquiv rich_degenerate(const DegeneracyWitness& w) {
    Equiv e{w.diagram, cert_degeneracy(w)};
    RichEquiv out(e, [w](const RichEquiv&) {
        DegeneracyWitness r = reverse_witness(w);
        StructCell z = left_invertor(w);
        StructCell h = right_invertor(w);
        return mats(rich_degenerate(r), rich_degenerate(z.w), rich_degenerate(h.w));
    });
    out.set_witness(w);
    return out;
}

RichEquiv rich_refl(const Diagram& u) { return rich_degenerate(unit(u).w); }

RichEquiv rich_trans(const RichEquiv& a, const RichEquiv& b) {
    DiagPasting glued = paste_diagrams(a.d(), b.d(), a.d().dim() - 1);
    if (a.witness() && b.witness()) {
        auto merged = merge_trans_witness(*a.witness(), *b.witness(), glued);
        if (!merged) {
            std::vector<int> q(glued.whole.size(), -1);
            for (std::size_t x = 0; x < a.d().size(); ++x)
                q[static_cast<std::size_t>(glued.incl_left[x])] = a.witness()->projection.assign[x];
            merged = search_witness(glued.whole, std::move(q), a.witness()->base);
            if (!merged) {
                std::vector<int> q2(glued.whole.size(), -1);
                for (std::size_t x = 0; x < b.d().size(); ++x)
                    q2[static_cast<std::size_t>(glued.incl_right[x])] = b.witness()->projection.assign[x];
                merged = search_witness(glued.whole, std::move(q2), b.witness()->base);
            }
            if (!merged)
                merged = search_witness(glued.whole, std::vector<int>(glued.whole.size(), -1),
                                        boundary_diagram(glued.whole, Sign::Plus));
            if (!merged)
                merged = search_witness(glued.whole, std::vector<int>(glued.whole.size(), -1),
                                        boundary_diagram(glued.whole, Sign::Minus));
        }
        if (merged) return rich_degenerate(*merged);
        if (getenv("DSETS_TRACE"))
            fprintf(stderr, "merge_trans FAILED a=%zu b=%zu\n", a.d().size(), b.d().size());
    } else if (getenv("DSETS_TRACE")) {
        fprintf(stderr, "rich_trans unwitnessed factors a=%d b=%d\n", a.witness() != nullptr, b.witness() != nullptr);
    }
    Equiv e{glued.whole, cert_compose(a.d(), a.cert(), b.d(), b.cert(), PastePos{a.d().dim() - 1, {}, true})};
    return RichEquiv(e, [a, b](const RichEquiv&) {
        RichEquiv inv = rich_trans(b.inverse(), a.inverse());
        return mats(inv, delete_recipe(a, b), insert_recipe(a, b));
    });
}

RichEquiv rich_sym(const RichEquiv& a) {
    if (a.witness()) return rich_degenerate(reverse_witness(*a.witness()));
    RichEquiv inv = a.inverse();
    RichEquiv out(inv.equiv(),
                  [a](const RichEquiv&) { return mats(a, rich_sym(a.invertor_h()), rich_sym(a.invertor_z())); });
    if (inv.witness()) out.set_witness(*inv.witness());
    return out;
}

RichEquiv rich_subdiag(const Diagram& ambient, const Bitset& vsub, const RichEquiv& h) {
    return rich_subdiag_impl(ambient, ambient.shape().poset()->closure(vsub), h);
}

RichEquiv rich_subdiag_over(const DegeneracyWitness& ambient, const Bitset& glued, const RichEquiv& h) {
    return rich_onto(ambient, glued, h);
}

namespace {

// Apply a context to two diagrams related by a projection, in lockstep, and
// assemble the induced projection between the results.
struct PairApply {
    Diagram big, base;
    std::vector<int> q;
};

PairApply capply_pair(const CtxPtr& f, const Diagram& x, const Diagram& y, const std::vector<int>& p) {
    return std::visit(
        [&](const auto& n) -> PairApply {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, XIdentity>) {
                return {x, y, p};
            } else if constexpr (std::is_same_v<T, XCompose>) {
                PairApply first = capply_pair(n.inner, x, y, p);
                return capply_pair(n.outer, first.big, first.base, first.q);
            } else if constexpr (std::is_same_v<T, XPromote>) {
                return capply_pair(n.inner, x, y, p);
            } else if constexpr (std::is_same_v<T, std::shared_ptr<const XSubstAt>>) {
                fail(Err::Internal, "witness transport through substitution contexts is not supported");
            } else {
                CtxApply ax = apply_context(f, x);
                CtxApply ay = apply_context(f, y);
                std::vector<int> q(ax.result.size(), -1);
                for (std::size_t i = 0; i < x.size(); ++i)
                    q[static_cast<std::size_t>(ax.hole_map[i])] = ay.hole_map[static_cast<std::size_t>(p[i])];
                std::vector<int> ax_rest, ay_rest;
                for (std::size_t i = 0; i < ax.result.size(); ++i)
                    if (q[i] < 0) ax_rest.push_back(static_cast<int>(i));
                {
                    std::vector<char> hit(ay.result.size(), 0);
                    for (std::size_t i = 0; i < y.size(); ++i)
                        hit[static_cast<std::size_t>(ay.hole_map[i])] = 1;
                    for (std::size_t i = 0; i < ay.result.size(); ++i)
                        if (!hit[i]) ay_rest.push_back(static_cast<int>(i));
                }
                require(ax_rest.size() == ay_rest.size(), Err::Internal,
                        "context witness transport: padding sizes differ");
                for (std::size_t i = 0; i < ax_rest.size(); ++i)
                    q[static_cast<std::size_t>(ax_rest[i])] = ay_rest[i];
                return {ax.result, ay.result, q};
            }
        },
        f->node);
}

}  // namespace

RichEquiv context_apply_rich(const CtxPtr& hctx, const RichEquiv& e) {
    if (e.witness()) {
        const DegeneracyWitness& w = *e.witness();
        PairApply pa = capply_pair(hctx, w.diagram, w.base, w.projection.assign);
        DegeneracyWitness w2{pa.big, MolMap{pa.big.shape().poset(), pa.base.shape().poset(), pa.q}, pa.base};
        require(witness_valid(w2), Err::Internal, "context application produced an invalid collapse witness");
        return rich_degenerate(w2);
    }
    const CertPtr& c = e.cert();
    require(c != nullptr, Err::UnsupportedCert, "context application needs a structured certificate");
    if (const auto* cp = std::get_if<CCompose>(&c->node)) {
        if (cp->pos.iota.empty()) {
            RichEquiv l = context_apply_rich(hctx, rich_from_cert(Equiv{cp->left, cp->leftc}));
            RichEquiv r = context_apply_rich(hctx, rich_from_cert(Equiv{cp->right, cp->rightc}));
            RichEquiv out = rich_trans(l, r);
            require(diagram_equal(out.d(), apply_ctx(hctx, e.d())), Err::Internal,
                    "context application does not distribute over the composite");
            return out;
        }
        if (const auto* amb = std::get_if<CDegeneracy>(&cp->leftc->node)) {
            PairApply pa = capply_pair(hctx, amb->w.diagram, amb->w.base, amb->w.projection.assign);
            DegeneracyWitness w2{pa.big, MolMap{pa.big.shape().poset(), pa.base.shape().poset(), pa.q}, pa.base};
            require(witness_valid(w2), Err::Internal, "context application produced an invalid collapse witness");
            RichEquiv hr = context_apply_rich(hctx, rich_from_cert(Equiv{cp->right, cp->rightc}));
            Bitset hin = hr.d().shape().boundary_set(Sign::Minus);
            SubDiagram hins = restrict_diagram(hr.d(), hin);
            Bitset bp = w2.diagram.shape().boundary_set(Sign::Plus);
            auto emb = embed_diagram_into(hins.diagram, w2.diagram, bp);
            require(emb.has_value(), Err::Internal, "context application lost the pushforward position");
            Bitset glued(w2.diagram.size());
            for (int t : *emb) glued.set(static_cast<std::size_t>(t));
            RichEquiv out = rich_subdiag_over(w2, w2.diagram.shape().poset()->closure(glued), hr);
            require(diagram_equal(out.d(), apply_ctx(hctx, e.d())), Err::Internal,
                    "context application does not distribute over the pushforward");
            return out;
        }
    }
    fail(Err::UnsupportedCert, "context application is not supported for this certificate shape");
}

RichEquiv rich_from_cert(const Equiv& e) {
    require(e.cert != nullptr, Err::UnsupportedCert, "rich wrapper needs a certificate");
    if (const auto* d = std::get_if<CDegeneracy>(&e.cert->node)) return rich_degenerate(d->w);
    if (const auto* cp = std::get_if<CCompose>(&e.cert->node)) {
        if (cp->pos.iota.empty())
            return rich_trans(rich_from_cert(Equiv{cp->left, cp->leftc}),
                              rich_from_cert(Equiv{cp->right, cp->rightc}));
        if (const auto* amb = std::get_if<CDegeneracy>(&cp->leftc->node)) {
            RichEquiv hr = rich_from_cert(Equiv{cp->right, cp->rightc});
            Bitset hin = hr.d().shape().boundary_set(Sign::Minus);
            SubDiagram hins = restrict_diagram(hr.d(), hin);
            Bitset bp = amb->w.diagram.shape().boundary_set(Sign::Plus);
            auto emb = embed_diagram_into(hins.diagram, amb->w.diagram, bp);
            require(emb.has_value(), Err::UnsupportedCert, "cannot locate the pushforward position");
            Bitset glued(amb->w.diagram.size());
            for (int t : *emb) glued.set(static_cast<std::size_t>(t));
            return rich_subdiag_over(amb->w, amb->w.diagram.shape().poset()->closure(glued), hr);
        }
    }
    return RichEquiv(e, nullptr);
}

}  // namespace dsets
