#include "dsets/structcells.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace dsets {

bool witness_valid(const DegeneracyWitness& w) {
    if (!w.diagram.valid() || !w.base.valid()) return false;
    if (w.base.dim() >= w.diagram.dim()) return false;
    if (w.projection.src->structure_key() != w.diagram.shape().poset()->structure_key()) return false;
    if (w.projection.tgt->structure_key() != w.base.shape().poset()->structure_key()) return false;
    for (std::size_t x = 0; x < w.diagram.size(); ++x)
        if (w.diagram.label(static_cast<int>(x)) != w.base.label(w.projection.assign[x])) return false;
    return is_surjective(w.projection) && check_cartesian(w.projection);
}

Diagram pullback_labels(const Molecule& total, const MolMap& proj, const Diagram& base) {
    std::vector<int> labels(total.size());
    for (std::size_t x = 0; x < total.size(); ++x) labels[x] = base.label(proj.assign[x]);
    return Diagram::trusted(total, std::move(labels), base.pres());
}

Bitset cyl_copy_subset(const Cylinder& c, Sign side) {
    Bitset out(c.cyl.size());
    for (std::size_t x = 0; x < c.copies.size(); ++x) {
        if (c.at_k[x] >= 0)
            out.set(static_cast<std::size_t>(c.at_k[x]));
        else
            out.set(static_cast<std::size_t>(c.copies[x][side == Sign::Minus ? 0 : 1]));
    }
    return out;
}

Bitset cyl_over(const Cylinder& c, const Bitset& base_subset) {
    Bitset out(c.cyl.size());
    for (std::size_t e = 0; e < c.cyl.size(); ++e)
        if (base_subset.get(static_cast<std::size_t>(c.tau.assign[e]))) out.set(e);
    return out;
}

namespace {

// Interior of a closed subset computed within the subset itself.
Bitset subset_interior(const Molecule& u, const Bitset& vsub) {
    SubMol v = molecule_from_subset(u, vsub, "anchor");
    Bitset bd = v.mol.boundary_both_set();
    Bitset out(u.size());
    for (std::size_t j = 0; j < v.old_of_new.size(); ++j)
        if (!bd.get(j)) out.set(static_cast<std::size_t>(v.old_of_new[j]));
    return out;
}

void check_rewritable_in(const Molecule& u, const Bitset& boundary_part, const Bitset& vsub, const char* who) {
    require(vsub.subset_of(boundary_part), Err::NotRewritable,
            std::string(who) + ": subdiagram must lie in the stated boundary");
    require(u.poset()->is_closed(vsub), Err::NotClosed, std::string(who) + ": subdiagram must be closed");
    SubMol v = molecule_from_subset(u, vsub, "rewritable");
    require(v.mol.is_round(), Err::NotRewritable, std::string(who) + ": subdiagram must be round");
    require(v.mol.dim() == u.poset()->dim_of_subset(boundary_part), Err::NotRewritable,
            std::string(who) + ": subdiagram must be top-dimensional in the boundary");
}

StructCell finish_cell(const Diagram& u, Cylinder&& c, Diagram source, Diagram target, bool check_type) {
    StructCell out;
    out.cyl = std::move(c);
    Diagram total = pullback_labels(out.cyl.cyl, out.cyl.tau, u);
    out.w.diagram = total;
    out.w.projection = out.cyl.tau;
    out.w.base = u;
    out.source = std::move(source);
    out.target = std::move(target);
    if (check_type) {
        require(diagram_equal(boundary_diagram(total, Sign::Minus), out.source), Err::TypeMismatch,
                "structure cell input boundary does not match its declared type");
        require(diagram_equal(boundary_diagram(total, Sign::Plus), out.target), Err::TypeMismatch,
                "structure cell output boundary does not match its declared type");
    }
    return out;
}

}  // namespace

StructCell unit(const Diagram& u) {
    Cylinder c = partial_gray_cylinder(u.shape(), u.shape().boundary_both_set());
    return finish_cell(u, std::move(c), u, u, true);
}

StructCell left_unitor(const Diagram& u, const Bitset& vsub) {
    Bitset bd_minus = u.shape().boundary_set(Sign::Minus);
    check_rewritable_in(u.shape(), bd_minus, vsub, "left_unitor");
    Bitset k_set = u.shape().boundary_both_set() - subset_interior(u.shape(), vsub);
    Cylinder c = partial_gray_cylinder(u.shape(), k_set);

    // target: eps v pasted onto u at the subdiagram
    SubDiagram v = restrict_diagram(u, vsub);
    StructCell eps = unit(v.diagram);
    std::vector<int> iota(eps.w.diagram.size(), -1);
    {
        Bitset cap = eps.cyl.cyl.boundary_set(Sign::Plus);
        for (std::size_t e = 0; e < eps.w.diagram.size(); ++e)
            if (cap.get(e)) iota[e] = v.old_of_new[static_cast<std::size_t>(eps.cyl.tau.assign[e])];
    }
    Diagram target = paste_diagrams_sub(eps.w.diagram, u, u.dim() - 1, iota, true).whole;
    return finish_cell(u, std::move(c), u, target, true);
}

StructCell right_unitor(const Diagram& u, const Bitset& vsub) {
    Bitset bd_plus = u.shape().boundary_set(Sign::Plus);
    check_rewritable_in(u.shape(), bd_plus, vsub, "right_unitor");
    Bitset k_set = u.shape().boundary_both_set() - subset_interior(u.shape(), vsub);
    if (!u.shape().poset()->is_closed(k_set) && getenv("DSETS_TRACE")) {
        fprintf(stderr, "right_unitor bad K: u size %zu dim %d round %d, vsub %zu\n", u.size(), u.dim(),
                (int)u.round(), vsub.count());
    }
    Cylinder c = partial_gray_cylinder(u.shape(), k_set);

    SubDiagram v = restrict_diagram(u, vsub);
    StructCell eps = unit(v.diagram);
    std::vector<int> iota(eps.w.diagram.size(), -1);
    {
        Bitset cap = eps.cyl.cyl.boundary_set(Sign::Minus);
        for (std::size_t e = 0; e < eps.w.diagram.size(); ++e)
            if (cap.get(e)) iota[e] = v.old_of_new[static_cast<std::size_t>(eps.cyl.tau.assign[e])];
    }
    Diagram source = paste_diagrams_sub(u, eps.w.diagram, u.dim() - 1, iota, false).whole;
    return finish_cell(u, std::move(c), source, u, true);
}

StructCell higher_unitor(const Diagram& u, int k, const Bitset& vsub, bool left) {
    require(k >= 0 && k < u.dim(), Err::BadCodimension, "higher_unitor: k out of range");
    if (k == u.dim() - 1) return left ? left_unitor(u, vsub) : right_unitor(u, vsub);

    Bitset side_bd = u.shape().boundary_set(k, left ? Sign::Minus : Sign::Plus);
    check_rewritable_in(u.shape(), side_bd, vsub, "higher_unitor");
    Bitset k_set = u.shape().boundary_both_set(k) - subset_interior(u.shape(), vsub);
    Cylinder c = partial_gray_cylinder(u.shape(), k_set);

    // declared type: u # hu(bd^+ u)  =>  hu(bd^- u) # u, pasted at the
    // canonical copies of the boundaries inside the recursive unitors
    auto recurse = [&](Sign a) {
        SubDiagram b = restrict_diagram(u, u.shape().boundary_set(a));
        Bitset vsub_in_b(b.diagram.size());
        for (int x : vsub.to_vector()) {
            int nb = b.new_of_old[static_cast<std::size_t>(x)];
            require(nb >= 0, Err::BadCodimension, "higher_unitor: anchor not inside the boundary");
            vsub_in_b.set(static_cast<std::size_t>(nb));
        }
        return std::make_pair(higher_unitor(b.diagram, k, vsub_in_b, left), b);
    };
    auto [hu_plus, bplus] = recurse(Sign::Plus);
    auto [hu_minus, bminus] = recurse(Sign::Minus);

    // source: u #_{n-1} hu_plus at the minus-copy of bd^+ u inside hu_plus
    std::vector<int> iota_src(u.size(), -1);
    {
        Bitset bd = u.shape().boundary_set(Sign::Plus);
        for (int x : bd.to_vector()) {
            int in_b = bplus.new_of_old[static_cast<std::size_t>(x)];
            int e = hu_plus.cyl.at_k[static_cast<std::size_t>(in_b)];
            if (e < 0) e = hu_plus.cyl.copies[static_cast<std::size_t>(in_b)][0];
            iota_src[static_cast<std::size_t>(x)] = e;
        }
    }
    Diagram source = paste_diagrams_sub(u, hu_plus.w.diagram, u.dim() - 1, iota_src, true).whole;

    // target: hu_minus #_{n-1} u at the plus-copy of bd^- u inside hu_minus
    std::vector<int> iota_tgt(u.size(), -1);
    {
        Bitset bd = u.shape().boundary_set(Sign::Minus);
        for (int x : bd.to_vector()) {
            int in_b = bminus.new_of_old[static_cast<std::size_t>(x)];
            int e = hu_minus.cyl.at_k[static_cast<std::size_t>(in_b)];
            if (e < 0) e = hu_minus.cyl.copies[static_cast<std::size_t>(in_b)][1];
            iota_tgt[static_cast<std::size_t>(x)] = e;
        }
    }
    Diagram target = paste_diagrams_sub(hu_minus.w.diagram, u, u.dim() - 1, iota_tgt, false).whole;

    return finish_cell(u, std::move(c), source, target, true);
}

DegeneracyWitness reverse_witness(const DegeneracyWitness& w) {
    OgPtr dshape = dual_top(w.diagram.shape().poset());
    Molecule m = Molecule::wrap(dshape, MoleculeExpr::imported("rev"));
    DegeneracyWitness out;
    out.diagram = Diagram::trusted(m, w.diagram.labels(), w.diagram.pres());
    out.projection = MolMap{m.poset(), w.projection.tgt, w.projection.assign};
    out.base = w.base;
    return out;
}

namespace {

StructCell invertor(const DegeneracyWitness& w, bool left) {
    require(witness_valid(w), Err::NotDegenerate, "invertor requires a valid degeneracy witness");
    const Diagram& u = w.diagram;
    Bitset k_set = u.shape().boundary_set(left ? Sign::Plus : Sign::Minus);
    Cylinder c = inverted_cylinder(u.shape(), k_set, left);

    Diagram rev_u = reverse_witness(w).diagram;
    Diagram source, target;
    bool check_type = u.round();
    if (check_type) {
        if (left) {
            source = paste_top(u, rev_u).whole;
            target = unit(boundary_diagram(u, Sign::Minus)).w.diagram;
        } else {
            source = unit(boundary_diagram(u, Sign::Plus)).w.diagram;
            target = paste_top(rev_u, u).whole;
        }
    }

    StructCell out;
    out.cyl = std::move(c);
    Diagram total = pullback_labels(out.cyl.cyl, out.cyl.tau, u);
    out.w.diagram = total;
    out.w.projection = compose(w.projection, out.cyl.tau);
    out.w.base = w.base;
    out.source = source.valid() ? source : boundary_diagram(total, Sign::Minus);
    out.target = target.valid() ? target : boundary_diagram(total, Sign::Plus);
    if (check_type) {
        require(diagram_equal(boundary_diagram(total, Sign::Minus), out.source), Err::TypeMismatch,
                "invertor input boundary does not match its declared type");
        require(diagram_equal(boundary_diagram(total, Sign::Plus), out.target), Err::TypeMismatch,
                "invertor output boundary does not match its declared type");
    }
    return out;
}

}  // namespace

StructCell left_invertor(const DegeneracyWitness& w) { return invertor(w, true); }

StructCell right_invertor(const DegeneracyWitness& w) { return invertor(w, false); }

}  // namespace dsets
