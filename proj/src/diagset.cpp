#include "dsets/diagset.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace dsets {

Diagram Diagram::trusted(Molecule shape, std::vector<int> labels, PresPtr pres) {
    require(labels.size() == shape.size(), Err::LabelMismatch, "labelling must be total");
    Diagram d;
    d.shape_ = std::move(shape);
    d.labels_ = std::move(labels);
    d.pres_ = std::move(pres);
    for (std::size_t e = 0; e < d.labels_.size(); ++e) {
        int g = d.labels_[e];
        require(g >= 0 && g < static_cast<int>(d.pres_->size()), Err::UnmappedGenerator,
                "unknown generator id " + std::to_string(g));
        require(d.pres_->gen(g).dim <= d.shape_.poset()->dim_of(static_cast<int>(e)), Err::LabelMismatch,
                "label of element " + std::to_string(e) + " exceeds its dimension");
    }
    return d;
}

Diagram Diagram::validated(Molecule shape, std::vector<int> labels, PresPtr pres) {
    Diagram d = trusted(std::move(shape), std::move(labels), std::move(pres));
    auto report = validate_diagram(d);
    require(report.ok, Err::LabelMismatch, "invalid diagram: " + report.trace);
    return d;
}

bool Diagram::degenerate_at(int e) const {
    return pres_->gen(labels_[static_cast<std::size_t>(e)]).dim < shape_.poset()->dim_of(e);
}

std::shared_ptr<Presentation> Presentation::create() { return std::make_shared<Presentation>(); }

int Presentation::id_of(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

int Presentation::add_generator0(const std::string& name) {
    require(by_name_.find(name) == by_name_.end(), Err::ParseError, "duplicate generator " + name);
    Generator g;
    g.name = name;
    g.dim = 0;
    g.atom_shape = point();
    g.atom_labels = {static_cast<int>(gens_.size())};
    by_name_[name] = static_cast<int>(gens_.size());
    gens_.push_back(std::move(g));
    return static_cast<int>(gens_.size()) - 1;
}

int Presentation::add_generator(const std::string& name, const Diagram& input, const Diagram& output) {
    require(by_name_.find(name) == by_name_.end(), Err::ParseError, "duplicate generator " + name);
    require(input.valid() && output.valid(), Err::NotParallel, "generator boundaries must be diagrams");
    require(input.dim() == output.dim(), Err::DimensionMismatch, "generator boundaries of unequal dimension");
    require(input.round() && output.round(), Err::NotRound, "generator boundaries must be round");
    require(parallel(input, output), Err::NotParallel, "generator boundaries must be parallel");

    Pasting glued = cell_ext(input.shape(), output.shape());
    std::vector<int> labels(glued.whole.size(), -1);
    for (std::size_t x = 0; x < input.size(); ++x)
        labels[static_cast<std::size_t>(glued.incl_left[x])] = input.label(static_cast<int>(x));
    for (std::size_t y = 0; y < output.size(); ++y) {
        int id = glued.incl_right[y];
        if (labels[static_cast<std::size_t>(id)] >= 0)
            require(labels[static_cast<std::size_t>(id)] == output.label(static_cast<int>(y)), Err::NotParallel,
                    "generator boundaries disagree on the glued sphere");
        labels[static_cast<std::size_t>(id)] = output.label(static_cast<int>(y));
    }
    int new_id = static_cast<int>(gens_.size());
    labels.back() = new_id;  // the greatest element is the last one appended by cell_ext
    for (int l : labels) require(l >= 0, Err::Internal, "atom labelling left a hole");

    Generator g;
    g.name = name;
    g.dim = input.dim() + 1;
    g.input = input;
    g.output = output;
    g.atom_shape = glued.whole;
    g.atom_labels = std::move(labels);
    by_name_[name] = new_id;
    gens_.push_back(std::move(g));
    return new_id;
}

Diagram Presentation::cell(int id) const {
    const Generator& g = gen(id);
    return Diagram::trusted(g.atom_shape, g.atom_labels, self());
}

// --- validation ----------------------------------------------------------------

namespace {

// Backtracking search for an assignment cl{x} -> atom, constrained by labels,
// dimensions and face images, then checked as a surjective cartesian map.
std::optional<MolMap> factor_search(const OgPtr& src, const std::vector<int>& src_labels, const OgPtr& tgt,
                                    const std::vector<int>& tgt_labels) {
    std::vector<int> order(src->size());
    for (std::size_t i = 0; i < src->size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return src->dim_of(a) < src->dim_of(b); });

    // downsets of the target, for order-preservation pruning
    std::vector<Bitset> dtgt(tgt->size(), Bitset(tgt->size()));
    {
        std::vector<int> torder(tgt->size());
        for (std::size_t i = 0; i < tgt->size(); ++i) torder[i] = static_cast<int>(i);
        std::stable_sort(torder.begin(), torder.end(), [&](int a, int b) { return tgt->dim_of(a) < tgt->dim_of(b); });
        for (int x : torder) {
            dtgt[static_cast<std::size_t>(x)].set(static_cast<std::size_t>(x));
            for (int a = 0; a < 2; ++a)
                for (int y : tgt->faces(x, static_cast<Sign>(a)))
                    dtgt[static_cast<std::size_t>(x)] |= dtgt[static_cast<std::size_t>(y)];
        }
    }

    std::vector<int> assign(src->size(), -1);
    std::optional<MolMap> found;
    std::function<bool(std::size_t)> dfs = [&](std::size_t pos) {
        if (pos == order.size()) {
            MolMap f{src, tgt, assign};
            if (is_surjective(f) && check_cartesian(f)) {
                found = std::move(f);
                return true;
            }
            return false;
        }
        int x = order[pos];
        for (std::size_t c = 0; c < tgt->size(); ++c) {
            int cand = static_cast<int>(c);
            if (tgt_labels[c] != src_labels[static_cast<std::size_t>(x)]) continue;
            if (tgt->dim_of(cand) > src->dim_of(x)) continue;
            bool ok = true;
            for (int a = 0; a < 2 && ok; ++a)
                for (int y : src->faces(x, static_cast<Sign>(a)))
                    if (!dtgt[c].get(static_cast<std::size_t>(assign[static_cast<std::size_t>(y)]))) {
                        ok = false;
                        break;
                    }
            if (!ok) continue;
            assign[static_cast<std::size_t>(x)] = cand;
            if (dfs(pos + 1)) return true;
            assign[static_cast<std::size_t>(x)] = -1;
        }
        return false;
    };
    dfs(0);
    return found;
}

}  // namespace

std::optional<MolMap> factor_through_atom(const Diagram& d, int x) {
    const Generator& g = d.pres()->gen(d.label(x));
    Bitset sx(d.size());
    sx.set(static_cast<std::size_t>(x));
    SubPoset clx = sub_poset(d.shape().poset(), d.shape().poset()->closure(sx));
    std::vector<int> labels(clx.poset->size());
    for (std::size_t j = 0; j < labels.size(); ++j)
        labels[j] = d.label(clx.old_of_new[j]);
    return factor_search(clx.poset, labels, g.atom_shape.poset(), g.atom_labels);
}

ValidationReport validate_diagram(const Diagram& d) {
    ValidationReport r;
    for (std::size_t x = 0; x < d.size(); ++x) {
        int g = d.label(static_cast<int>(x));
        if (d.pres()->gen(g).dim > d.shape().poset()->dim_of(static_cast<int>(x))) {
            r.ok = false;
            r.first_bad = static_cast<int>(x);
            r.trace = "element " + std::to_string(x) + ": label dimension exceeds element dimension";
            return r;
        }
        if (!factor_through_atom(d, static_cast<int>(x))) {
            r.ok = false;
            r.first_bad = static_cast<int>(x);
            r.trace = "element " + std::to_string(x) + ": lower set does not factor through atom of '" +
                      d.pres()->gen(g).name + "'";
            return r;
        }
    }
    return r;
}

// --- structure -------------------------------------------------------------------

SubDiagram restrict_diagram(const Diagram& d, const Bitset& members) {
    SubMol sm = molecule_from_subset(d.shape(), members, "restrict");
    std::vector<int> labels(sm.mol.size());
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = d.label(sm.old_of_new[j]);
    SubDiagram out;
    out.diagram = Diagram::trusted(sm.mol, std::move(labels), d.pres());
    out.old_of_new = std::move(sm.old_of_new);
    out.new_of_old = std::move(sm.new_of_old);
    return out;
}

Diagram boundary_diagram(const Diagram& d, int n, Sign a) {
    if (n >= d.dim()) return d;
    return restrict_diagram(d, d.shape().boundary_set(n, a)).diagram;
}

Diagram boundary_diagram(const Diagram& d, Sign a) { return boundary_diagram(d, d.dim() - 1, a); }

bool diagram_equal(const Diagram& a, const Diagram& b) {
    if (!a.valid() || !b.valid()) return false;
    if (a.pres() != b.pres() || a.size() != b.size() || a.dim() != b.dim()) return false;
    auto iso = find_isomorphism(a.shape().poset(), b.shape().poset());
    if (!iso) return false;
    for (std::size_t x = 0; x < a.size(); ++x)
        if (a.label(static_cast<int>(x)) != b.label(iso->assign[x])) return false;
    return true;
}

bool parallel(const Diagram& a, const Diagram& b) {
    if (a.dim() != b.dim()) return false;
    if (a.dim() == 0) return true;
    return diagram_equal(boundary_diagram(a, Sign::Minus), boundary_diagram(b, Sign::Minus)) &&
           diagram_equal(boundary_diagram(a, Sign::Plus), boundary_diagram(b, Sign::Plus));
}

std::optional<std::vector<int>> embed_diagram_into(const Diagram& small, const Diagram& big, const Bitset& within) {
    const auto& ps = *small.shape().poset();
    const auto& pb = *big.shape().poset();
    std::vector<int> order(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ps.dim_of(a) < ps.dim_of(b); });
    std::vector<int> assign(ps.size(), -1);
    std::vector<char> used(pb.size(), 0);
    std::function<bool(std::size_t)> dfs = [&](std::size_t pos) {
        if (pos == order.size()) return true;
        int x = order[pos];
        for (std::size_t c = 0; c < pb.size(); ++c) {
            if (used[c] || !within.get(c)) continue;
            int cand = static_cast<int>(c);
            if (pb.dim_of(cand) != ps.dim_of(x)) continue;
            if (big.label(cand) != small.label(x)) continue;
            bool ok = true;
            for (int a = 0; a < 2 && ok; ++a) {
                const auto& fs = ps.faces(x, static_cast<Sign>(a));
                const auto& gs = pb.faces(cand, static_cast<Sign>(a));
                if (fs.size() != gs.size()) { ok = false; break; }
                std::vector<int> mapped;
                for (int y : fs) mapped.push_back(assign[static_cast<std::size_t>(y)]);
                std::sort(mapped.begin(), mapped.end());
                if (mapped != gs) ok = false;
            }
            if (!ok) continue;
            assign[static_cast<std::size_t>(x)] = cand;
            used[c] = 1;
            if (dfs(pos + 1)) return true;
            used[c] = 0;
            assign[static_cast<std::size_t>(x)] = -1;
        }
        return false;
    };
    if (!dfs(0)) return std::nullopt;
    return assign;
}

std::optional<std::vector<int>> embed_diagram(const Diagram& small, const Diagram& big) {
    Bitset all(big.size());
    for (std::size_t i = 0; i < big.size(); ++i) all.set(i);
    return embed_diagram_into(small, big, all);
}

namespace {

DiagPasting label_pasting(const Pasting& p, const Diagram& u, const Diagram& v) {
    std::vector<int> labels(p.whole.size(), -1);
    for (std::size_t x = 0; x < u.size(); ++x)
        labels[static_cast<std::size_t>(p.incl_left[x])] = u.label(static_cast<int>(x));
    for (std::size_t y = 0; y < v.size(); ++y) {
        int id = p.incl_right[y];
        if (labels[static_cast<std::size_t>(id)] >= 0)
            require(labels[static_cast<std::size_t>(id)] == v.label(static_cast<int>(y)), Err::LabelMismatch,
                    "pasting factors disagree on the glued region");
        labels[static_cast<std::size_t>(id)] = v.label(static_cast<int>(y));
    }
    DiagPasting out;
    out.whole = Diagram::trusted(p.whole, std::move(labels), u.pres());
    out.incl_left = p.incl_left;
    out.incl_right = p.incl_right;
    return out;
}

}  // namespace

DiagPasting paste_diagrams(const Diagram& u, const Diagram& v, int k) {
    require(u.pres() == v.pres(), Err::LabelMismatch, "pasting across presentations");
    return label_pasting(paste(u.shape(), v.shape(), k), u, v);
}

DiagPasting paste_diagrams_sub(const Diagram& u, const Diagram& v, int k, const std::vector<int>& iota,
                               bool side_left) {
    require(u.pres() == v.pres(), Err::LabelMismatch, "pasting across presentations");
    return label_pasting(paste_at_submolecule(u.shape(), v.shape(), k, iota, side_left), u, v);
}

DiagPasting paste_top(const Diagram& u, const Diagram& v) {
    require(u.dim() == v.dim(), Err::DimensionMismatch, "paste_top needs equal dimensions");
    return paste_diagrams(u, v, u.dim() - 1);
}

DiagSubstitution substitute_diagram(const Diagram& u, const Diagram& w, const Bitset& v_subset) {
    require(u.pres() == w.pres(), Err::LabelMismatch, "substitution across presentations");
    SubDiagram v = restrict_diagram(u, v_subset);
    require(parallel(v.diagram, w), Err::NotParallel, "substituted diagram must be parallel to the subdiagram");
    // labels must agree on the shared boundary
    Substitution s = substitute(u.shape(), w.shape(), v_subset);
    std::vector<int> labels(s.whole.size(), -1);
    for (std::size_t x = 0; x < u.size(); ++x)
        if (s.kept[x] >= 0) labels[static_cast<std::size_t>(s.kept[x])] = u.label(static_cast<int>(x));
    for (std::size_t y = 0; y < w.size(); ++y) {
        int id = s.incl_w[y];
        if (labels[static_cast<std::size_t>(id)] >= 0)
            require(labels[static_cast<std::size_t>(id)] == w.label(static_cast<int>(y)), Err::LabelMismatch,
                    "substitution disagrees on the boundary");
        labels[static_cast<std::size_t>(id)] = w.label(static_cast<int>(y));
    }
    DiagSubstitution out;
    out.whole = Diagram::trusted(s.whole, std::move(labels), u.pres());
    out.kept = std::move(s.kept);
    out.incl_w = std::move(s.incl_w);
    return out;
}

// --- morphisms --------------------------------------------------------------------

PresentationMorphism make_morphism(const PresPtr& src, const PresPtr& tgt, const std::vector<int>& gen_map) {
    require(gen_map.size() == src->size(), Err::UnmappedGenerator, "morphism must map every generator");
    PresentationMorphism f{src, tgt, gen_map};
    for (std::size_t g = 0; g < src->size(); ++g) {
        int h = gen_map[g];
        require(h >= 0 && h < static_cast<int>(tgt->size()), Err::UnmappedGenerator,
                "morphism maps '" + src->gen(static_cast<int>(g)).name + "' outside the target");
        require(src->gen(static_cast<int>(g)).dim == tgt->gen(h).dim, Err::UnmappedGenerator,
                "morphism must preserve dimension at '" + src->gen(static_cast<int>(g)).name + "'");
        if (src->gen(static_cast<int>(g)).dim > 0) {
            Diagram in = apply_morphism(f, src->gen(static_cast<int>(g)).input);
            Diagram out = apply_morphism(f, src->gen(static_cast<int>(g)).output);
            require(diagram_equal(in, tgt->gen(h).input) && diagram_equal(out, tgt->gen(h).output),
                    Err::UnmappedGenerator,
                    "morphism is not boundary-compatible at '" + src->gen(static_cast<int>(g)).name + "'");
        }
    }
    return f;
}

Diagram apply_morphism(const PresentationMorphism& f, const Diagram& d) {
    require(d.pres() == f.src, Err::UnmappedGenerator, "diagram not over the morphism source");
    std::vector<int> labels(d.size());
    for (std::size_t x = 0; x < d.size(); ++x) labels[x] = f.gen_map[static_cast<std::size_t>(d.label(static_cast<int>(x)))];
    return Diagram::trusted(d.shape(), std::move(labels), f.tgt);
}

}  // namespace dsets
