#include "dsets/molecule.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace dsets {

ExprPtr MoleculeExpr::point() {
    auto e = std::make_shared<MoleculeExpr>();
    e->kind = Kind::Point;
    return e;
}

ExprPtr MoleculeExpr::paste(ExprPtr l, ExprPtr r, int k) {
    auto e = std::make_shared<MoleculeExpr>();
    e->kind = Kind::Paste;
    e->left = std::move(l);
    e->right = std::move(r);
    e->k = k;
    return e;
}

ExprPtr MoleculeExpr::cell_ext(ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<MoleculeExpr>();
    e->kind = Kind::CellExt;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
}

ExprPtr MoleculeExpr::paste_sub(ExprPtr l, ExprPtr r, int k, bool on_left, std::vector<int> iota) {
    auto e = std::make_shared<MoleculeExpr>();
    e->kind = Kind::PasteSub;
    e->left = std::move(l);
    e->right = std::move(r);
    e->k = k;
    e->sub_on_left = on_left;
    e->iota = std::move(iota);
    return e;
}

ExprPtr MoleculeExpr::imported(std::string tag) {
    auto e = std::make_shared<MoleculeExpr>();
    e->kind = Kind::Imported;
    e->imported_tag = std::move(tag);
    return e;
}

std::string expr_to_string(const ExprPtr& e) {
    if (!e) return "?";
    using K = MoleculeExpr::Kind;
    switch (e->kind) {
        case K::Point: return "pt";
        case K::Paste:
            return "paste(" + expr_to_string(e->left) + "," + expr_to_string(e->right) + "," +
                   std::to_string(e->k) + ")";
        case K::CellExt: return "cell(" + expr_to_string(e->left) + "," + expr_to_string(e->right) + ")";
        case K::PasteSub:
            return std::string(e->sub_on_left ? "lsub(" : "rsub(") + expr_to_string(e->left) + "," +
                   expr_to_string(e->right) + "," + std::to_string(e->k) + ")";
        case K::Imported: return "<" + e->imported_tag + ">";
    }
    return "?";
}

Molecule Molecule::wrap(OgPtr p, ExprPtr e) {
    require(p != nullptr, Err::Internal, "wrap on null poset");
    require(p->is_globular(p->all()), Err::NotGlobular, "shape is not globular");
    // regularity: every lower set is a round shape whose boundary covers it
    for (std::size_t x = 0; x < p->size(); ++x) {
        if (p->dim_of(static_cast<int>(x)) == 0) continue;
        Bitset sx(p->size());
        sx.set(x);
        Bitset clx = p->closure(sx);
        Bitset sphere = p->boundary_both(clx);
        Bitset rest = clx;
        rest.reset(x);
        require(sphere == rest, Err::NotMolecule,
                "lower set of element " + std::to_string(x) + " is not an atom");
        require(p->is_round(clx), Err::NotMolecule,
                "lower set of element " + std::to_string(x) + " is not round");
    }
    auto d = std::make_shared<Data>();
    d->poset = std::move(p);
    d->expr = e ? std::move(e) : MoleculeExpr::imported("unknown");
    Molecule m;
    m.d_ = std::move(d);
    return m;
}

Bitset Molecule::boundary_set(int n, Sign a) const { return d_->poset->boundary(d_->poset->all(), n, a); }

Bitset Molecule::boundary_both_set(int n) const { return d_->poset->boundary_both(d_->poset->all(), n); }

bool Molecule::is_round() const {
    std::lock_guard<std::mutex> lk(d_->mu);
    if (!d_->round) d_->round = d_->poset->is_round(d_->poset->all());
    return *d_->round;
}

bool Molecule::is_globular() const { return true; }  // checked at wrap

bool Molecule::is_atom() const {
    Bitset m = d_->poset->maximal(d_->poset->all());
    return m.count() == 1;
}

SubMol molecule_from_subset(const Molecule& parent, const Bitset& members, const char* tag) {
    SubPoset sp = sub_poset(parent.poset(), members);
    SubMol out;
    out.mol = Molecule::wrap(sp.poset, MoleculeExpr::imported(tag));
    out.old_of_new = std::move(sp.old_of_new);
    out.new_of_old = std::move(sp.new_of_old);
    return out;
}

Molecule boundary_molecule(const Molecule& u, int n, Sign a) {
    return molecule_from_subset(u, u.boundary_set(n, a), "boundary").mol;
}

Molecule boundary_molecule(const Molecule& u, Sign a) { return boundary_molecule(u, u.dim() - 1, a); }

std::optional<MolMap> mol_iso(const Molecule& a, const Molecule& b) {
    return find_isomorphism(a.poset(), b.poset());
}

Molecule point() {
    std::vector<OgPoset::Elem> e(1);
    e[0].dim = 0;
    return Molecule::wrap(OgPoset::make(std::move(e)), MoleculeExpr::point());
}

namespace {

// Glue V onto U along the partial identification ident: V id -> U id
// (-1 keeps the element). The identified subset must be closed in V and the
// identification must be an orientation-preserving embedding of that subset
// into U. The result keeps U ids and appends the remaining V elements.
struct GlueResult {
    OgPtr poset;
    std::vector<int> incl_left, incl_right;
};

GlueResult glue(const OgPtr& u, const OgPtr& v, const std::vector<int>& ident) {
    require(ident.size() == v->size(), Err::Internal, "glue: ident size mismatch");
    for (std::size_t w = 0; w < v->size(); ++w) {
        if (ident[w] < 0) continue;
        require(v->dim_of(static_cast<int>(w)) == u->dim_of(ident[w]), Err::BoundaryMismatch,
                "glue: identified elements of different dimension");
        for (int a = 0; a < 2; ++a) {
            std::vector<int> mapped;
            for (int y : v->faces(static_cast<int>(w), static_cast<Sign>(a))) {
                require(ident[static_cast<std::size_t>(y)] >= 0, Err::BoundaryMismatch,
                        "glue: identified subset is not closed");
                mapped.push_back(ident[static_cast<std::size_t>(y)]);
            }
            std::sort(mapped.begin(), mapped.end());
            require(mapped == u->faces(ident[w], static_cast<Sign>(a)), Err::BoundaryMismatch,
                    "glue: identification does not preserve faces");
        }
    }
    GlueResult out;
    out.incl_left.resize(u->size());
    for (std::size_t i = 0; i < u->size(); ++i) out.incl_left[i] = static_cast<int>(i);
    out.incl_right.assign(v->size(), -1);
    std::vector<OgPoset::Elem> elems;
    elems.reserve(u->size() + v->size());
    for (std::size_t i = 0; i < u->size(); ++i) elems.push_back(u->elem(static_cast<int>(i)));
    for (auto& e : elems) { e.cofaces[0].clear(); e.cofaces[1].clear(); }
    int next = static_cast<int>(u->size());
    for (std::size_t w = 0; w < v->size(); ++w)
        out.incl_right[w] = ident[w] >= 0 ? ident[w] : next++;
    for (std::size_t w = 0; w < v->size(); ++w) {
        if (ident[w] >= 0) continue;
        OgPoset::Elem e;
        e.dim = v->dim_of(static_cast<int>(w));
        for (int a = 0; a < 2; ++a)
            for (int y : v->faces(static_cast<int>(w), static_cast<Sign>(a)))
                e.faces[a].push_back(out.incl_right[static_cast<std::size_t>(y)]);
        elems.push_back(std::move(e));
    }
    out.poset = OgPoset::make(std::move(elems));
    return out;
}

// Identification of bd_k^+ U with bd_k^- V through their unique isomorphism.
std::vector<int> boundary_ident(const Molecule& u, const Molecule& v, int k) {
    Bitset bu = u.boundary_set(k, Sign::Plus);
    Bitset bv = v.boundary_set(k, Sign::Minus);
    SubPoset su = sub_poset(u.poset(), bu);
    SubPoset sv = sub_poset(v.poset(), bv);
    auto iso = find_isomorphism(sv.poset, su.poset);
    require(iso.has_value(), Err::NoBoundaryIso,
            "no isomorphism between output " + std::to_string(k) + "-boundary and input boundary");
    std::vector<int> ident(v.size(), -1);
    for (std::size_t j = 0; j < sv.old_of_new.size(); ++j)
        ident[static_cast<std::size_t>(sv.old_of_new[j])] = su.old_of_new[static_cast<std::size_t>(iso->assign[j])];
    return ident;
}

}  // namespace

Pasting paste(const Molecule& u, const Molecule& v, int k) {
    require(k >= 0, Err::DimensionMismatch, "paste: k must be >= 0");
    if (k >= u.dim()) {
        // absorption: U must be the whole input k-boundary of V
        Bitset bv = v.boundary_set(k, Sign::Minus);
        SubPoset sv = sub_poset(v.poset(), bv);
        auto iso = find_isomorphism(u.poset(), sv.poset);
        require(iso.has_value(), Err::NoBoundaryIso, "paste: absorbed factor does not match boundary");
        Pasting out;
        out.whole = v;
        out.incl_right.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out.incl_right[i] = static_cast<int>(i);
        out.incl_left.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            out.incl_left[i] = sv.old_of_new[static_cast<std::size_t>(iso->assign[i])];
        return out;
    }
    if (k >= v.dim()) {
        Bitset bu = u.boundary_set(k, Sign::Plus);
        SubPoset su = sub_poset(u.poset(), bu);
        auto iso = find_isomorphism(v.poset(), su.poset);
        require(iso.has_value(), Err::NoBoundaryIso, "paste: absorbed factor does not match boundary");
        Pasting out;
        out.whole = u;
        out.incl_left.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) out.incl_left[i] = static_cast<int>(i);
        out.incl_right.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            out.incl_right[i] = su.old_of_new[static_cast<std::size_t>(iso->assign[i])];
        return out;
    }
    auto ident = boundary_ident(u, v, k);
    auto g = glue(u.poset(), v.poset(), ident);
    Pasting out;
    out.whole = Molecule::wrap(g.poset, MoleculeExpr::paste(u.expr(), v.expr(), k));
    out.incl_left = std::move(g.incl_left);
    out.incl_right = std::move(g.incl_right);
    return out;
}

Pasting paste_at_submolecule(const Molecule& u, const Molecule& v, int k, const std::vector<int>& iota,
                             bool side_left) {
    require(k >= 0, Err::DimensionMismatch, "paste_at_submolecule: k must be >= 0");
    if (side_left) {
        // iota: U id -> V id on bd_k^+ U, landing in bd_k^- V
        require(iota.size() == u.size(), Err::NotSubmolecule, "iota must be indexed by the left factor");
        Bitset bu = u.boundary_set(k, Sign::Plus);
        Bitset bv = v.boundary_set(k, Sign::Minus);
        std::vector<int> ident(v.size(), -1);
        for (std::size_t x = 0; x < u.size(); ++x) {
            bool inb = bu.get(x);
            require(inb == (iota[x] >= 0), Err::NotSubmolecule, "iota domain must be the output k-boundary");
            if (iota[x] >= 0) {
                require(bv.get(static_cast<std::size_t>(iota[x])), Err::NotSubmolecule,
                        "iota image must lie in the input k-boundary");
                ident[static_cast<std::size_t>(iota[x])] = static_cast<int>(x);
            }
        }
        // glue U onto V (V keeps ids), then report with U on the left
        auto g = glue(v.poset(), u.poset(), [&] {
            std::vector<int> id_u(u.size(), -1);
            for (std::size_t x = 0; x < u.size(); ++x)
                if (iota[x] >= 0) id_u[x] = iota[x];
            return id_u;
        }());
        Pasting out;
        out.whole = Molecule::wrap(g.poset, MoleculeExpr::paste_sub(u.expr(), v.expr(), k, true, iota));
        out.incl_left = std::move(g.incl_right);
        out.incl_right = std::move(g.incl_left);
        return out;
    }
    // iota: V id -> U id on bd_k^- V, landing in bd_k^+ U
    require(iota.size() == v.size(), Err::NotSubmolecule, "iota must be indexed by the right factor");
    Bitset bv = v.boundary_set(k, Sign::Minus);
    Bitset bu = u.boundary_set(k, Sign::Plus);
    std::vector<int> ident(v.size(), -1);
    for (std::size_t x = 0; x < v.size(); ++x) {
        bool inb = bv.get(x);
        require(inb == (iota[x] >= 0), Err::NotSubmolecule, "iota domain must be the input k-boundary");
        if (iota[x] >= 0) {
            require(bu.get(static_cast<std::size_t>(iota[x])), Err::NotSubmolecule,
                    "iota image must lie in the output k-boundary");
            ident[x] = iota[x];
        }
    }
    auto g = glue(u.poset(), v.poset(), ident);
    Pasting out;
    out.whole = Molecule::wrap(g.poset, MoleculeExpr::paste_sub(u.expr(), v.expr(), k, false, iota));
    out.incl_left = std::move(g.incl_left);
    out.incl_right = std::move(g.incl_right);
    return out;
}

Pasting cell_ext(const Molecule& u, const Molecule& v) {
    require(u.dim() == v.dim(), Err::DimensionMismatch, "cell_ext: factors must have equal dimension");
    require(u.is_round() && v.is_round(), Err::NotRound, "cell_ext: factors must be round");
    const int n = u.dim();
    std::vector<int> ident(v.size(), -1);
    for (int a = 0; a < 2; ++a) {
        Bitset bu = u.boundary_set(n - 1, static_cast<Sign>(a));
        Bitset bv = v.boundary_set(n - 1, static_cast<Sign>(a));
        SubPoset su = sub_poset(u.poset(), bu);
        SubPoset sv = sub_poset(v.poset(), bv);
        auto iso = find_isomorphism(sv.poset, su.poset);
        require(iso.has_value(), Err::NoBoundaryIso, "cell_ext: boundaries do not match");
        for (std::size_t j = 0; j < sv.old_of_new.size(); ++j) {
            int vid = sv.old_of_new[j];
            int uid = su.old_of_new[static_cast<std::size_t>(iso->assign[j])];
            require(ident[static_cast<std::size_t>(vid)] < 0 || ident[static_cast<std::size_t>(vid)] == uid,
                    Err::NoBoundaryIso, "cell_ext: boundary isomorphisms disagree on the sphere equator");
            ident[static_cast<std::size_t>(vid)] = uid;
        }
    }
    auto g = glue(u.poset(), v.poset(), ident);
    std::vector<OgPoset::Elem> elems;
    elems.reserve(g.poset->size() + 1);
    for (std::size_t i = 0; i < g.poset->size(); ++i) {
        auto e = g.poset->elem(static_cast<int>(i));
        e.cofaces[0].clear();
        e.cofaces[1].clear();
        elems.push_back(std::move(e));
    }
    OgPoset::Elem top;
    top.dim = n + 1;
    for (std::size_t x = 0; x < u.size(); ++x)
        if (u.poset()->dim_of(static_cast<int>(x)) == n) top.faces[0].push_back(g.incl_left[x]);
    for (std::size_t y = 0; y < v.size(); ++y)
        if (v.poset()->dim_of(static_cast<int>(y)) == n) top.faces[1].push_back(g.incl_right[y]);
    elems.push_back(std::move(top));
    Pasting out;
    out.whole = Molecule::wrap(OgPoset::make(std::move(elems)), MoleculeExpr::cell_ext(u.expr(), v.expr()));
    out.incl_left = std::move(g.incl_left);
    out.incl_right = std::move(g.incl_right);
    return out;
}

Substitution substitute(const Molecule& u, const Molecule& w, const Bitset& v_subset) {
    require(u.poset()->is_closed(v_subset), Err::NotClosed, "substitute: subset not closed");
    SubMol v = molecule_from_subset(u, v_subset, "rewritable");
    require(v.mol.dim() == u.dim(), Err::NotRewritable, "substitute: subset must be top-dimensional");
    require(v.mol.is_round(), Err::NotRewritable, "substitute: subset must be round");
    require(w.is_round(), Err::NotRound, "substitute: replacement must be round");
    require(w.dim() == v.mol.dim(), Err::DimensionMismatch, "substitute: dimension mismatch");

    const int n = w.dim();
    // identify bd W with bd V inside U
    std::vector<int> ident(w.size(), -1);  // W id -> U id
    for (int a = 0; a < 2; ++a) {
        Bitset bw = w.boundary_set(n - 1, static_cast<Sign>(a));
        Bitset bv = v.mol.boundary_set(n - 1, static_cast<Sign>(a));
        SubPoset sw = sub_poset(w.poset(), bw);
        SubPoset sv = sub_poset(v.mol.poset(), bv);
        auto iso = find_isomorphism(sw.poset, sv.poset);
        require(iso.has_value(), Err::BoundaryMismatch, "substitute: boundary of replacement does not match");
        for (std::size_t j = 0; j < sw.old_of_new.size(); ++j) {
            int wid = sw.old_of_new[j];
            int uid = v.old_of_new[static_cast<std::size_t>(sv.old_of_new[static_cast<std::size_t>(iso->assign[j])])];
            require(ident[static_cast<std::size_t>(wid)] < 0 || ident[static_cast<std::size_t>(wid)] == uid,
                    Err::BoundaryMismatch, "substitute: boundary isomorphisms disagree");
            ident[static_cast<std::size_t>(wid)] = uid;
        }
    }

    // interior of the subset, computed in its own poset then mapped back
    Bitset int_v(u.size());
    {
        Bitset bd_in_v = v.mol.boundary_both_set();
        for (std::size_t j = 0; j < v.old_of_new.size(); ++j)
            if (!bd_in_v.get(j)) int_v.set(static_cast<std::size_t>(v.old_of_new[j]));
    }

    Substitution out;
    out.kept.assign(u.size(), -1);
    std::vector<OgPoset::Elem> elems;
    int next = 0;
    for (std::size_t x = 0; x < u.size(); ++x) {
        if (int_v.get(x)) continue;
        out.kept[x] = next++;
    }
    for (std::size_t x = 0; x < u.size(); ++x) {
        if (out.kept[x] < 0) continue;
        OgPoset::Elem e;
        e.dim = u.poset()->dim_of(static_cast<int>(x));
        for (int a = 0; a < 2; ++a)
            for (int y : u.poset()->faces(static_cast<int>(x), static_cast<Sign>(a))) {
                require(out.kept[static_cast<std::size_t>(y)] >= 0, Err::NotRewritable,
                        "substitute: kept element has a face in the excised interior");
                e.faces[a].push_back(out.kept[static_cast<std::size_t>(y)]);
            }
        elems.push_back(std::move(e));
    }
    out.incl_w.assign(w.size(), -1);
    Bitset bd_w = w.boundary_both_set();
    for (std::size_t y = 0; y < w.size(); ++y) {
        if (bd_w.get(y)) {
            out.incl_w[y] = out.kept[static_cast<std::size_t>(ident[y])];
        } else {
            out.incl_w[y] = next++;
        }
    }
    for (std::size_t y = 0; y < w.size(); ++y) {
        if (bd_w.get(y)) continue;
        OgPoset::Elem e;
        e.dim = w.poset()->dim_of(static_cast<int>(y));
        for (int a = 0; a < 2; ++a)
            for (int z : w.poset()->faces(static_cast<int>(y), static_cast<Sign>(a)))
                e.faces[a].push_back(out.incl_w[static_cast<std::size_t>(z)]);
        elems.push_back(std::move(e));
    }
    out.whole = Molecule::wrap(OgPoset::make(std::move(elems)), MoleculeExpr::imported("subst"));
    return out;
}

// --- layerings --------------------------------------------------------------

namespace {

// Depth-first enumeration of k-layerings; fn returns false to stop.
void for_each_layering(const Molecule& u, int k, const std::function<bool(const Layering&)>& fn) {
    const auto& p = *u.poset();
    if (k < -1 || k >= u.dim()) return;
    Bitset max_all = p.maximal(p.all());
    std::vector<int> tops;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (max_all.get(i) && p.dim_of(static_cast<int>(i)) > k) tops.push_back(static_cast<int>(i));
    if (tops.empty()) return;

    Bitset bd_minus = p.boundary(p.all(), k, Sign::Minus);
    Bitset bd_plus = p.boundary(p.all(), k, Sign::Plus);

    Layering cur;
    cur.k = k;
    cur.frontiers.push_back(bd_minus);
    Bitset covered = bd_minus;
    std::vector<char> used(tops.size(), 0);
    bool stop = false;

    std::function<void()> dfs = [&] {
        if (stop) return;
        if (cur.order.size() == tops.size()) {
            if (covered == p.all() && cur.frontiers.back() == bd_plus) {
                if (!fn(cur)) stop = true;
            }
            return;
        }
        if (k < 0 && !cur.order.empty()) return;  // no pasting below dimension 0
        for (std::size_t t = 0; t < tops.size() && !stop; ++t) {
            if (used[t]) continue;
            int x = tops[t];
            Bitset sx(p.size());
            sx.set(static_cast<std::size_t>(x));
            Bitset clx = p.closure(sx);
            const Bitset& front = cur.frontiers.back();
            Bitset layer = front | clx;
            if (p.boundary(layer, k, Sign::Minus) != front) continue;
            Bitset nf = p.boundary(layer, k, Sign::Plus);
            used[t] = 1;
            cur.order.push_back(x);
            cur.layers.push_back(layer);
            cur.frontiers.push_back(nf);
            Bitset saved = covered;
            covered |= layer;
            dfs();
            covered = saved;
            cur.frontiers.pop_back();
            cur.layers.pop_back();
            cur.order.pop_back();
            used[t] = 0;
        }
    };
    dfs();
}

}  // namespace

std::vector<Layering> layerings(const Molecule& u, int k) {
    std::vector<Layering> out;
    for_each_layering(u, k, [&](const Layering& l) {
        out.push_back(l);
        return true;
    });
    return out;
}

std::optional<Layering> first_layering(const Molecule& u, int k) {
    std::optional<Layering> out;
    for_each_layering(u, k, [&](const Layering& l) {
        out = l;
        return false;
    });
    return out;
}

int layering_dimension(const Molecule& u) {
    {
        std::lock_guard<std::mutex> lk(u.d_->mu);
        if (u.d_->lydim) return *u.d_->lydim;
    }
    int result = u.dim();  // sentinel: no layering found (should not happen on molecules)
    for (int k = -1; k < u.dim(); ++k)
        if (first_layering(u, k)) { result = k; break; }
    std::lock_guard<std::mutex> lk(u.d_->mu);
    u.d_->lydim = result;
    return result;
}

// --- submolecules -----------------------------------------------------------

SubmoleculeInclusion whole_submolecule(const Molecule& u) {
    SubmoleculeInclusion s;
    s.image = u.all();
    s.sub = u;
    s.old_of_new.resize(u.size());
    s.new_of_old.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        s.old_of_new[i] = static_cast<int>(i);
        s.new_of_old[i] = static_cast<int>(i);
    }
    s.rewritable = u.is_round();
    return s;
}

namespace {

struct SubSearch {
    const Molecule& u;
    int budget;
    struct PairHash {
        std::size_t operator()(const std::pair<Bitset, Bitset>& p) const {
            return p.first.hash() * 31 + p.second.hash();
        }
    };
    std::unordered_map<std::pair<Bitset, Bitset>, int, PairHash> memo;  // 1 yes, 0 no, 2 budget

    int rec(const Bitset& ambient, const Bitset& target) {
        if (target == ambient) return 1;
        auto key = std::make_pair(ambient, target);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        if (--budget <= 0) return 2;
        int result = 0;
        SubMol am = molecule_from_subset(u, ambient, "submol-search");
        bool budget_hit = false;
        for (int k = 0; k < am.mol.dim() && result != 1; ++k) {
            for_each_layering(am.mol, k, [&](const Layering& l) {
                const std::size_t m = l.layers.size();
                if (m < 2) return true;
                // translate layers back into parent coordinates
                std::vector<Bitset> pl;
                pl.reserve(m);
                for (const auto& lay : l.layers) {
                    Bitset b(u.size());
                    for (std::size_t j = 0; j < am.old_of_new.size(); ++j)
                        if (lay.get(j)) b.set(static_cast<std::size_t>(am.old_of_new[j]));
                    pl.push_back(std::move(b));
                }
                // minimal window of consecutive layers containing the target
                std::size_t lo = 0;
                {
                    Bitset suffix(u.size());
                    std::vector<Bitset> suf(m + 1, Bitset(u.size()));
                    for (std::size_t i = m; i-- > 0;) suf[i] = suf[i + 1] | pl[i];
                    while (lo + 1 < m && target.subset_of(suf[lo + 1])) ++lo;
                }
                Bitset window(u.size());
                std::size_t hi = lo;
                window = pl[lo];
                while (hi + 1 < m && !target.subset_of(window)) window |= pl[++hi];
                if (!target.subset_of(window)) return true;
                if (lo == 0 && hi == m - 1) return true;
                int r = rec(window, target);
                if (r == 1) { result = 1; return false; }
                if (r == 2) budget_hit = true;
                return true;
            });
        }
        if (result != 1 && budget_hit) result = 2;
        memo[key] = result;
        return result;
    }
};

}  // namespace

std::optional<SubmoleculeInclusion> find_submolecule(const Molecule& u, const Bitset& s, int budget) {
    require(u.poset()->is_closed(s), Err::NotClosed, "find_submolecule: subset not closed");
    if (s.none()) return std::nullopt;
    SubSearch search{u, budget, {}};
    int r = search.rec(u.all(), s);
    if (r == 2) fail(Err::Undecided, "submolecule search exhausted its node budget");
    if (r == 0) return std::nullopt;
    SubmoleculeInclusion out;
    SubMol sm = molecule_from_subset(u, s, "submolecule");
    out.image = s;
    out.sub = sm.mol;
    out.old_of_new = std::move(sm.old_of_new);
    out.new_of_old = std::move(sm.new_of_old);
    out.rewritable = out.sub.dim() == u.dim() && out.sub.is_round();
    return out;
}

// --- functorial constructions ------------------------------------------------

Molecule gray_product(const Molecule& u, const Molecule& v) {
    const auto& pu = *u.poset();
    const auto& pv = *v.poset();
    const std::size_t nv = pv.size();
    std::vector<OgPoset::Elem> elems(pu.size() * nv);
    for (std::size_t x = 0; x < pu.size(); ++x)
        for (std::size_t y = 0; y < nv; ++y) {
            auto& e = elems[x * nv + y];
            const int dx = pu.dim_of(static_cast<int>(x));
            e.dim = dx + pv.dim_of(static_cast<int>(y));
            for (int a = 0; a < 2; ++a) {
                for (int x2 : pu.faces(static_cast<int>(x), static_cast<Sign>(a)))
                    e.faces[a].push_back(static_cast<int>(static_cast<std::size_t>(x2) * nv + y));
                Sign b = (dx % 2 == 0) ? static_cast<Sign>(a) : flip(static_cast<Sign>(a));
                for (int y2 : pv.faces(static_cast<int>(y), b))
                    e.faces[a].push_back(static_cast<int>(x * nv + static_cast<std::size_t>(y2)));
            }
        }
    return Molecule::wrap(OgPoset::make(std::move(elems)), MoleculeExpr::imported("gray"));
}

namespace {

Cylinder build_cylinder(const Molecule& u, const Bitset& k_set, int invert /* 0 none, 1 left, 2 right */) {
    const auto& p = *u.poset();
    require(p.is_closed(k_set), Err::NotClosed, "cylinder: K must be closed");
    const int n = u.dim();
    if (invert == 1)
        require(k_set.subset_of(u.boundary_set(Sign::Plus)), Err::KNotInBoundary,
                "left-inverted cylinder needs K inside the output boundary");
    if (invert == 2)
        require(k_set.subset_of(u.boundary_set(Sign::Minus)), Err::KNotInBoundary,
                "right-inverted cylinder needs K inside the input boundary");

    Cylinder out;
    out.k_set = k_set;
    out.copies.assign(p.size(), {-1, -1, -1});
    out.at_k.assign(p.size(), -1);
    int next = 0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (k_set.get(x)) {
            out.at_k[x] = next++;
        } else {
            out.copies[x] = {next, next + 1, next + 2};  // bot (0-), top (0+), mid (1)
            next += 3;
        }
    }
    std::vector<OgPoset::Elem> elems(static_cast<std::size_t>(next));
    std::vector<int> tau_assign(static_cast<std::size_t>(next));

    auto add_cap_faces = [&](std::size_t x, int cap /*0 bot, 1 top*/, bool reversed) {
        // i = 0^-/0^+ copy of x: faces are the same-cap copies, K elements collapse
        auto& e = elems[static_cast<std::size_t>(out.copies[x][cap])];
        e.dim = p.dim_of(static_cast<int>(x));
        for (int a = 0; a < 2; ++a) {
            Sign read = reversed ? flip(static_cast<Sign>(a)) : static_cast<Sign>(a);
            for (int y : p.faces(static_cast<int>(x), read)) {
                auto yy = static_cast<std::size_t>(y);
                e.faces[a].push_back(k_set.get(yy) ? out.at_k[yy] : out.copies[yy][cap]);
            }
        }
    };

    for (std::size_t x = 0; x < p.size(); ++x) {
        if (out.at_k[x] >= 0) {
            auto& e = elems[static_cast<std::size_t>(out.at_k[x])];
            e.dim = p.dim_of(static_cast<int>(x));
            tau_assign[static_cast<std::size_t>(out.at_k[x])] = static_cast<int>(x);
            for (int a = 0; a < 2; ++a)
                for (int y : p.faces(static_cast<int>(x), static_cast<Sign>(a)))
                    e.faces[a].push_back(out.at_k[static_cast<std::size_t>(y)]);
            continue;
        }
        const bool top_dim = p.dim_of(static_cast<int>(x)) == n;
        tau_assign[static_cast<std::size_t>(out.copies[x][0])] = static_cast<int>(x);
        tau_assign[static_cast<std::size_t>(out.copies[x][1])] = static_cast<int>(x);
        tau_assign[static_cast<std::size_t>(out.copies[x][2])] = static_cast<int>(x);

        add_cap_faces(x, 0, invert == 2 && top_dim);  // 0^- copy reversed in the right-inverted case
        add_cap_faces(x, 1, invert == 1 && top_dim);  // 0^+ copy reversed in the left-inverted case

        auto& mid = elems[static_cast<std::size_t>(out.copies[x][2])];
        mid.dim = p.dim_of(static_cast<int>(x)) + 1;
        auto push_mids = [&](int a, Sign read, bool with_caps) {
            if (with_caps) {
                mid.faces[a].push_back(out.copies[x][0]);
                mid.faces[a].push_back(out.copies[x][1]);
            }
            for (int y : p.faces(static_cast<int>(x), read)) {
                auto yy = static_cast<std::size_t>(y);
                if (!k_set.get(yy)) mid.faces[a].push_back(out.copies[yy][2]);
            }
        };
        if (top_dim && invert == 1) {
            push_mids(0, Sign::Plus, true);    // faces_-(1,x) = caps + mids over faces_+ x \ K
            push_mids(1, Sign::Minus, false);  // faces_+(1,x) = mids over faces_- x
        } else if (top_dim && invert == 2) {
            push_mids(0, Sign::Plus, false);
            push_mids(1, Sign::Minus, true);
        } else {
            // faces_a(1,x) = (0^a, x) + mids over faces_{-a} x \ K
            mid.faces[0].push_back(out.copies[x][0]);
            push_mids(0, Sign::Plus, false);
            mid.faces[1].push_back(out.copies[x][1]);
            push_mids(1, Sign::Minus, false);
        }
    }

    const char* tag = invert == 0 ? "cyl" : (invert == 1 ? "lcyl" : "rcyl");
    out.cyl = Molecule::wrap(OgPoset::make(std::move(elems)), MoleculeExpr::imported(tag));
    out.tau = MolMap{out.cyl.poset(), u.poset(), std::move(tau_assign)};
    return out;
}

}  // namespace

Cylinder partial_gray_cylinder(const Molecule& u, const Bitset& k_set) { return build_cylinder(u, k_set, 0); }

Cylinder inverted_cylinder(const Molecule& u, const Bitset& k_set, bool left) {
    return build_cylinder(u, k_set, left ? 1 : 2);
}

// --- recognition --------------------------------------------------------------

namespace {

std::mutex g_mol_memo_mu;
std::unordered_map<std::string, std::optional<ExprPtr>> g_mol_memo;

std::optional<ExprPtr> recognize(const OgPtr& p);

std::optional<ExprPtr> recognize_subset(const OgPtr& p, const Bitset& s) {
    return recognize(sub_poset(p, s).poset);
}

std::optional<ExprPtr> recognize_impl(const OgPtr& p) {
    if (p->size() == 0) return std::nullopt;
    if (p->size() == 1) return p->dim_of(0) == 0 ? std::optional<ExprPtr>(MoleculeExpr::point()) : std::nullopt;
    if (p->dim() == 0) return std::nullopt;  // several points never form a molecule

    Molecule m;
    try {
        m = Molecule::wrap(p, MoleculeExpr::imported("candidate"));
    } catch (const KernelError&) {
        return std::nullopt;
    }

    Bitset maxima = p->maximal(p->all());
    if (maxima.count() == 1) {
        // atom rule: strip the greatest element, recognize the two hemispheres
        int top = maxima.to_vector()[0];
        Bitset sx(p->size());
        sx.set(static_cast<std::size_t>(top));
        if (p->closure(sx) != p->all()) return std::nullopt;
        const int n = p->dim();
        Bitset um = p->boundary(p->all(), n - 1, Sign::Minus);
        Bitset vm = p->boundary(p->all(), n - 1, Sign::Plus);
        Bitset rest = p->all();
        rest.reset(static_cast<std::size_t>(top));
        if ((um | vm) != rest) return std::nullopt;
        // the top element's faces must be exactly the top-dimensional parts of the hemispheres
        auto check_faces = [&](Sign a, const Bitset& side) {
            std::vector<int> expect;
            for (std::size_t i = 0; i < p->size(); ++i)
                if (side.get(i) && p->dim_of(static_cast<int>(i)) == n - 1) expect.push_back(static_cast<int>(i));
            return expect == p->faces(top, a);
        };
        if (!check_faces(Sign::Minus, um) || !check_faces(Sign::Plus, vm)) return std::nullopt;
        if (!p->is_round(um) || !p->is_round(vm)) return std::nullopt;
        for (int a = 0; a < 2; ++a)
            if (p->boundary(um, n - 2, static_cast<Sign>(a)) != p->boundary(vm, n - 2, static_cast<Sign>(a)))
                return std::nullopt;
        auto wu = recognize_subset(p, um);
        if (!wu) return std::nullopt;
        auto wv = recognize_subset(p, vm);
        if (!wv) return std::nullopt;
        return MoleculeExpr::cell_ext(*wu, *wv);
    }

    // split through a proper layering at some k
    for (int k = 0; k < p->dim(); ++k) {
        std::optional<ExprPtr> found;
        for_each_layering(m, k, [&](const Layering& l) {
            if (l.layers.size() < 2) return true;
            Bitset rest(p->size());
            for (std::size_t i = 1; i < l.layers.size(); ++i) rest |= l.layers[i];
            auto wl = recognize_subset(p, l.layers[0]);
            if (!wl) return true;
            auto wr = recognize_subset(p, rest);
            if (!wr) return true;
            found = MoleculeExpr::paste(*wl, *wr, k);
            return false;
        });
        if (found) return found;
    }
    return std::nullopt;
}

std::optional<ExprPtr> recognize(const OgPtr& p) {
    std::string key = p->structure_key();
    {
        std::lock_guard<std::mutex> lk(g_mol_memo_mu);
        auto it = g_mol_memo.find(key);
        if (it != g_mol_memo.end()) return it->second;
    }
    auto result = recognize_impl(p);
    std::lock_guard<std::mutex> lk(g_mol_memo_mu);
    g_mol_memo[key] = result;
    return result;
}

}  // namespace

std::optional<ExprPtr> is_molecule(const OgPtr& p) { return recognize(p); }

OgPtr eval_expr(const ExprPtr& e) {
    if (!e) return nullptr;
    using K = MoleculeExpr::Kind;
    switch (e->kind) {
        case K::Point: return point().poset();
        case K::Paste: {
            auto l = eval_expr(e->left), r = eval_expr(e->right);
            if (!l || !r) return nullptr;
            return paste(Molecule::wrap(l, e->left), Molecule::wrap(r, e->right), e->k).whole.poset();
        }
        case K::CellExt: {
            auto l = eval_expr(e->left), r = eval_expr(e->right);
            if (!l || !r) return nullptr;
            return cell_ext(Molecule::wrap(l, e->left), Molecule::wrap(r, e->right)).whole.poset();
        }
        case K::PasteSub: {
            auto l = eval_expr(e->left), r = eval_expr(e->right);
            if (!l || !r) return nullptr;
            return paste_at_submolecule(Molecule::wrap(l, e->left), Molecule::wrap(r, e->right), e->k, e->iota,
                                        e->sub_on_left)
                .whole.poset();
        }
        case K::Imported: return nullptr;
    }
    return nullptr;
}

}  // namespace dsets
