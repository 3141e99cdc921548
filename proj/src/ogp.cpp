#include "dsets/ogp.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <functional>

namespace dsets {

const char* err_name(Err e) {
    switch (e) {
        case Err::InvalidElement: return "InvalidElement";
        case Err::NotClosed: return "NotClosed";
        case Err::NoBoundaryIso: return "NoBoundaryIso";
        case Err::NotRound: return "NotRound";
        case Err::NotGlobular: return "NotGlobular";
        case Err::DimensionMismatch: return "DimensionMismatch";
        case Err::NotSubmolecule: return "NotSubmolecule";
        case Err::NotRewritable: return "NotRewritable";
        case Err::BoundaryMismatch: return "BoundaryMismatch";
        case Err::NotMolecule: return "NotMolecule";
        case Err::KNotInBoundary: return "KNotInBoundary";
        case Err::LabelMismatch: return "LabelMismatch";
        case Err::NotParallel: return "NotParallel";
        case Err::UnmappedGenerator: return "UnmappedGenerator";
        case Err::NotDegenerate: return "NotDegenerate";
        case Err::TypeMismatch: return "TypeMismatch";
        case Err::IllFormedEquation: return "IllFormedEquation";
        case Err::UnsupportedCert: return "UnsupportedCert";
        case Err::MissingCellCert: return "MissingCellCert";
        case Err::ChainMismatch: return "ChainMismatch";
        case Err::MissingInverse: return "MissingInverse";
        case Err::NotWeaklyInvertible: return "NotWeaklyInvertible";
        case Err::DimensionTooLow: return "DimensionTooLow";
        case Err::BadCodimension: return "BadCodimension";
        case Err::BudgetExhausted: return "BudgetExhausted";
        case Err::Undecided: return "Undecided";
        case Err::ParseError: return "ParseError";
        case Err::Internal: return "Internal";
    }
    return "Unknown";
}

std::shared_ptr<const OgPoset> OgPoset::make(std::vector<Elem> elems) {
    auto p = std::shared_ptr<OgPoset>(new OgPoset());
    const int n = static_cast<int>(elems.size());
    for (int i = 0; i < n; ++i) {
        auto& e = elems[static_cast<std::size_t>(i)];
        require(e.dim >= 0, Err::InvalidElement, "negative dimension at element " + std::to_string(i));
        for (int a = 0; a < 2; ++a) {
            auto& fs = e.faces[a];
            std::sort(fs.begin(), fs.end());
            require(std::adjacent_find(fs.begin(), fs.end()) == fs.end(), Err::InvalidElement,
                    "duplicate face of element " + std::to_string(i));
            for (int y : fs) {
                require(y >= 0 && y < n, Err::InvalidElement,
                        "unknown face id " + std::to_string(y) + " of element " + std::to_string(i));
                require(elems[static_cast<std::size_t>(y)].dim == e.dim - 1, Err::InvalidElement,
                        "face " + std::to_string(y) + " of " + std::to_string(i) + " violates gradedness");
            }
        }
        std::vector<int> both;
        std::set_intersection(e.faces[0].begin(), e.faces[0].end(), e.faces[1].begin(), e.faces[1].end(),
                              std::back_inserter(both));
        require(both.empty(), Err::InvalidElement,
                "element " + std::to_string(i) + " has a face in both orientation classes");
        if (e.dim > 0) {
            require(!e.faces[0].empty() && !e.faces[1].empty(), Err::InvalidElement,
                    "element " + std::to_string(i) + " of positive dimension lacks a face orientation class");
        } else {
            require(e.faces[0].empty() && e.faces[1].empty(), Err::InvalidElement,
                    "0-dimensional element " + std::to_string(i) + " has faces");
        }
        e.cofaces[0].clear();
        e.cofaces[1].clear();
    }
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < 2; ++a)
            for (int y : elems[static_cast<std::size_t>(i)].faces[a])
                elems[static_cast<std::size_t>(y)].cofaces[a].push_back(i);
    int d = -1;
    for (auto& e : elems) d = std::max(d, e.dim);
    p->elems_ = std::move(elems);
    p->dim_ = d;
    return p;
}

bool OgPoset::is_face(int y, int x) const {
    const auto& e = elem(x);
    return std::binary_search(e.faces[0].begin(), e.faces[0].end(), y) ||
           std::binary_search(e.faces[1].begin(), e.faces[1].end(), y);
}

Bitset OgPoset::all() const {
    Bitset b(size());
    for (std::size_t i = 0; i < size(); ++i) b.set(i);
    return b;
}

Bitset OgPoset::grade(int n) const {
    Bitset b(size());
    for (std::size_t i = 0; i < size(); ++i)
        if (elems_[i].dim == n) b.set(i);
    return b;
}

Bitset OgPoset::maximal(const Bitset& u) const {
    Bitset b(size());
    for (std::size_t i = 0; i < size(); ++i) {
        if (!u.get(i)) continue;
        bool has_coface = false;
        for (int a = 0; a < 2 && !has_coface; ++a)
            for (int c : elems_[i].cofaces[a])
                if (u.get(static_cast<std::size_t>(c))) { has_coface = true; break; }
        if (!has_coface) b.set(i);
    }
    return b;
}

Bitset OgPoset::closure(const Bitset& s) const {
    Bitset out = s;
    std::deque<int> queue;
    for (std::size_t i = 0; i < size(); ++i)
        if (s.get(i)) queue.push_back(static_cast<int>(i));
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int a = 0; a < 2; ++a)
            for (int y : faces(x, static_cast<Sign>(a)))
                if (!out.get(static_cast<std::size_t>(y))) {
                    out.set(static_cast<std::size_t>(y));
                    queue.push_back(y);
                }
    }
    return out;
}

bool OgPoset::is_closed(const Bitset& s) const { return closure(s) == s; }

int OgPoset::dim_of_subset(const Bitset& u) const {
    int d = -1;
    for (std::size_t i = 0; i < size(); ++i)
        if (u.get(i)) d = std::max(d, elems_[i].dim);
    return d;
}

Bitset OgPoset::boundary(const Bitset& u, int n, Sign a) const {
    Bitset seed(size());
    if (n < 0) return seed;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!u.get(i)) continue;
        const auto& e = elems_[i];
        if (e.dim == n) {
            // keep x iff every coface of x inside u has x as an a-face
            bool ok = true;
            for (int c : e.cofaces[static_cast<int>(flip(a))])
                if (u.get(static_cast<std::size_t>(c))) { ok = false; break; }
            if (ok) seed.set(i);
        } else if (e.dim < n) {
            bool max_in_u = true;
            for (int s = 0; s < 2 && max_in_u; ++s)
                for (int c : e.cofaces[s])
                    if (u.get(static_cast<std::size_t>(c))) { max_in_u = false; break; }
            if (max_in_u) seed.set(i);
        }
    }
    return closure(seed);
}

Bitset OgPoset::boundary_both(const Bitset& u, int n) const {
    return boundary(u, n, Sign::Minus) | boundary(u, n, Sign::Plus);
}

Bitset OgPoset::boundary(const Bitset& u, Sign a) const {
    return boundary(u, dim_of_subset(u) - 1, a);
}

Bitset OgPoset::boundary_both(const Bitset& u) const {
    return boundary_both(u, dim_of_subset(u) - 1);
}

bool OgPoset::is_globular(const Bitset& u) const {
    const int d = dim_of_subset(u);
    for (int n = 1; n <= d; ++n)
        for (int b = 0; b < 2; ++b) {
            Bitset bn = boundary(u, n, static_cast<Sign>(b));
            for (int k = 0; k < n; ++k)
                for (int a = 0; a < 2; ++a)
                    if (boundary(bn, k, static_cast<Sign>(a)) != boundary(u, k, static_cast<Sign>(a)))
                        return false;
        }
    return true;
}

bool OgPoset::is_round(const Bitset& u) const {
    if (!is_globular(u)) return false;
    const int d = dim_of_subset(u);
    for (int n = 0; n < d; ++n) {
        Bitset meet = boundary(u, n, Sign::Minus) & boundary(u, n, Sign::Plus);
        if (meet != boundary_both(u, n - 1)) return false;
    }
    return true;
}

Bitset OgPoset::interior(const Bitset& u) const { return u - boundary_both(u); }

std::string OgPoset::structure_key() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < size(); ++i) {
        os << elems_[i].dim << ':';
        for (int a = 0; a < 2; ++a) {
            for (int y : elems_[i].faces[a]) os << y << ',';
            os << (a == 0 ? '-' : '+');
        }
        os << ';';
    }
    return os.str();
}

SubPoset sub_poset(const OgPtr& parent, const Bitset& members) {
    require(parent->is_closed(members), Err::NotClosed, "sub_poset requires a closed subset");
    SubPoset out;
    out.new_of_old.assign(parent->size(), -1);
    for (std::size_t i = 0; i < parent->size(); ++i)
        if (members.get(i)) {
            out.new_of_old[i] = static_cast<int>(out.old_of_new.size());
            out.old_of_new.push_back(static_cast<int>(i));
        }
    std::vector<OgPoset::Elem> elems(out.old_of_new.size());
    for (std::size_t j = 0; j < out.old_of_new.size(); ++j) {
        int old = out.old_of_new[j];
        elems[j].dim = parent->dim_of(old);
        for (int a = 0; a < 2; ++a)
            for (int y : parent->faces(old, static_cast<Sign>(a)))
                elems[j].faces[a].push_back(out.new_of_old[static_cast<std::size_t>(y)]);
    }
    out.poset = OgPoset::make(std::move(elems));
    return out;
}

OgPtr dual(const OgPtr& p, const std::vector<int>& dims) {
    std::vector<OgPoset::Elem> elems(p->size());
    for (std::size_t i = 0; i < p->size(); ++i) {
        elems[i].dim = p->dim_of(static_cast<int>(i));
        bool swap = std::find(dims.begin(), dims.end(), elems[i].dim) != dims.end();
        for (int a = 0; a < 2; ++a)
            elems[i].faces[a] = p->faces(static_cast<int>(i), static_cast<Sign>(swap ? 1 - a : a));
    }
    return OgPoset::make(std::move(elems));
}

OgPtr dual_top(const OgPtr& p) { return dual(p, {p->dim()}); }

Bitset MolMap::image(const Bitset& s) const {
    Bitset out(tgt->size());
    for (std::size_t i = 0; i < src->size(); ++i)
        if (s.get(i)) out.set(static_cast<std::size_t>(assign[i]));
    return out;
}

Bitset MolMap::image_all() const { return image(src->all()); }

MolMap identity_map(const OgPtr& p) {
    MolMap f{p, p, std::vector<int>(p->size())};
    for (std::size_t i = 0; i < p->size(); ++i) f.assign[i] = static_cast<int>(i);
    return f;
}

MolMap compose(const MolMap& second, const MolMap& first) {
    require(first.tgt.get() == second.src.get() || first.tgt->structure_key() == second.src->structure_key(),
            Err::TypeMismatch, "compose: middle posets differ");
    MolMap out{first.src, second.tgt, std::vector<int>(first.src->size())};
    for (std::size_t i = 0; i < first.src->size(); ++i)
        out.assign[i] = second.assign[static_cast<std::size_t>(first.assign[i])];
    return out;
}

namespace {

// Per-poset downset table, recomputed on demand. Posets are small enough that
// this linear scan is not worth caching across calls.
std::vector<Bitset> downsets(const OgPoset& p) {
    std::vector<Bitset> d(p.size(), Bitset(p.size()));
    // ids do not respect dimension order in general, so iterate by dimension
    std::vector<int> order(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p.dim_of(a) < p.dim_of(b); });
    for (int x : order) {
        d[static_cast<std::size_t>(x)].set(static_cast<std::size_t>(x));
        for (int a = 0; a < 2; ++a)
            for (int y : p.faces(x, static_cast<Sign>(a)))
                d[static_cast<std::size_t>(x)] |= d[static_cast<std::size_t>(y)];
    }
    return d;
}

}  // namespace

bool is_order_preserving(const MolMap& f) {
    auto dtgt = downsets(*f.tgt);
    for (std::size_t x = 0; x < f.src->size(); ++x)
        for (int a = 0; a < 2; ++a)
            for (int y : f.src->faces(static_cast<int>(x), static_cast<Sign>(a)))
                if (!dtgt[static_cast<std::size_t>(f.assign[x])].get(static_cast<std::size_t>(f.assign[static_cast<std::size_t>(y)])))
                    return false;
    return true;
}

bool is_dim_preserving(const MolMap& f) {
    for (std::size_t x = 0; x < f.src->size(); ++x)
        if (f.tgt->dim_of(f.assign[x]) != f.src->dim_of(static_cast<int>(x))) return false;
    return true;
}

bool is_surjective(const MolMap& f) { return f.image_all() == f.tgt->all(); }

bool is_inclusion(const MolMap& f) {
    std::vector<char> hit(f.tgt->size(), 0);
    for (std::size_t x = 0; x < f.src->size(); ++x) {
        int y = f.assign[x];
        if (hit[static_cast<std::size_t>(y)]) return false;
        hit[static_cast<std::size_t>(y)] = 1;
        if (f.tgt->dim_of(y) != f.src->dim_of(static_cast<int>(x))) return false;
    }
    for (std::size_t x = 0; x < f.src->size(); ++x)
        for (int a = 0; a < 2; ++a) {
            const auto& fs = f.src->faces(static_cast<int>(x), static_cast<Sign>(a));
            const auto& gt = f.tgt->faces(f.assign[x], static_cast<Sign>(a));
            if (fs.size() != gt.size()) return false;
            std::vector<int> mapped;
            for (int y : fs) mapped.push_back(f.assign[static_cast<std::size_t>(y)]);
            std::sort(mapped.begin(), mapped.end());
            if (mapped != gt) return false;
        }
    return true;
}

namespace {

// Connectivity of {y, y2} inside subset T of the source, through the
// comparability graph (zig-zag condition).
bool zigzag_connected(const OgPoset& p, const std::vector<Bitset>& downs, const Bitset& t, int y, int y2) {
    if (y == y2) return true;
    Bitset seen(p.size());
    std::deque<int> queue{y};
    seen.set(static_cast<std::size_t>(y));
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        if (cur == y2) return true;
        for (std::size_t z = 0; z < p.size(); ++z) {
            if (!t.get(z) || seen.get(z)) continue;
            bool cmp = downs[static_cast<std::size_t>(cur)].get(z) || downs[z].get(static_cast<std::size_t>(cur));
            if (cmp) {
                seen.set(z);
                queue.push_back(static_cast<int>(z));
            }
        }
    }
    return false;
}

}  // namespace

bool check_map(const MolMap& f) {
    const auto& src = *f.src;
    const auto& tgt = *f.tgt;
    if (f.assign.size() != src.size()) return false;
    for (int y : f.assign)
        if (y < 0 || y >= static_cast<int>(tgt.size())) return false;
    if (!is_order_preserving(f)) return false;
    for (std::size_t x = 0; x < src.size(); ++x)
        if (tgt.dim_of(f.assign[x]) > src.dim_of(static_cast<int>(x))) return false;

    auto dsrc = downsets(src);
    auto dtgt = downsets(tgt);
    for (std::size_t xi = 0; xi < src.size(); ++xi) {
        int x = static_cast<int>(xi);
        const Bitset& clx = dsrc[xi];
        const Bitset& clfx = dtgt[static_cast<std::size_t>(f.assign[xi])];
        for (int n = 0; n <= src.dim_of(x); ++n)
            for (int a = 0; a < 2; ++a) {
                Bitset bsrc = src.boundary(clx, n, static_cast<Sign>(a));
                Bitset btgt = tgt.boundary(clfx, n, static_cast<Sign>(a));
                if (f.image(bsrc) != btgt) return false;
                // finality of the restriction onto its image
                auto members = bsrc.to_vector();
                for (std::size_t i = 0; i < members.size(); ++i)
                    for (std::size_t j = i + 1; j < members.size(); ++j) {
                        int y = members[i], y2 = members[j];
                        if (f.assign[static_cast<std::size_t>(y)] != f.assign[static_cast<std::size_t>(y2)]) continue;
                        Bitset t(src.size());
                        int fy = f.assign[static_cast<std::size_t>(y)];
                        for (int w : members)
                            if (dtgt[static_cast<std::size_t>(f.assign[static_cast<std::size_t>(w)])].get(static_cast<std::size_t>(fy)))
                                t.set(static_cast<std::size_t>(w));
                        if (!zigzag_connected(src, dsrc, t, y, y2)) return false;
                    }
            }
    }
    return true;
}

namespace {

bool fibration_condition(const MolMap& f) {
    const auto& src = *f.src;
    const auto& tgt = *f.tgt;
    auto dsrc = downsets(src);
    auto dtgt = downsets(tgt);
    for (std::size_t xi = 0; xi < src.size(); ++xi) {
        const Bitset& clx = dsrc[xi];
        const Bitset& clfx = dtgt[static_cast<std::size_t>(f.assign[xi])];
        for (std::size_t yt = 0; yt < tgt.size(); ++yt) {
            if (!clfx.get(yt)) continue;
            // S = { z <= x : f(z) <= y' } must have a greatest element mapping to y'
            std::vector<int> s;
            for (std::size_t z = 0; z < src.size(); ++z)
                if (clx.get(z) && dtgt[yt].get(static_cast<std::size_t>(f.assign[z]))) s.push_back(static_cast<int>(z));
            int top = -1;
            for (int z : s) {
                bool ge_all = true;
                for (int z2 : s)
                    if (!dsrc[static_cast<std::size_t>(z)].get(static_cast<std::size_t>(z2))) { ge_all = false; break; }
                if (ge_all) { top = z; break; }
            }
            if (top < 0 || f.assign[static_cast<std::size_t>(top)] != static_cast<int>(yt)) return false;
        }
    }
    return true;
}

}  // namespace

bool check_cartesian(const MolMap& f) { return check_map(f) && fibration_condition(f); }

bool check_poset_fibration(const MolMap& f) { return is_order_preserving(f) && fibration_condition(f); }

namespace {

// Iterated signature refinement for isomorphism search.
std::vector<std::uint64_t> signatures(const OgPoset& p) {
    std::vector<std::uint64_t> sig(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& e = p.elem(static_cast<int>(i));
        sig[i] = 1469598103934665603ull;
        auto mix = [&](std::uint64_t v) {
            sig[i] ^= v + 0x9e3779b97f4a7c15ull + (sig[i] << 6) + (sig[i] >> 2);
        };
        mix(static_cast<std::uint64_t>(e.dim));
        mix(e.faces[0].size());
        mix(e.faces[1].size());
        mix(e.cofaces[0].size());
        mix(e.cofaces[1].size());
    }
    for (int round = 0; round < 4; ++round) {
        std::vector<std::uint64_t> next(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::uint64_t h = sig[i] * 1099511628211ull;
            auto mixlist = [&](const std::vector<int>& l, std::uint64_t salt) {
                std::vector<std::uint64_t> vals;
                for (int y : l) vals.push_back(sig[static_cast<std::size_t>(y)]);
                std::sort(vals.begin(), vals.end());
                for (auto v : vals) h = (h ^ (v + salt)) * 1099511628211ull;
            };
            const auto& e = p.elem(static_cast<int>(i));
            mixlist(e.faces[0], 11);
            mixlist(e.faces[1], 22);
            mixlist(e.cofaces[0], 33);
            mixlist(e.cofaces[1], 44);
            next[i] = h;
        }
        sig = std::move(next);
    }
    return sig;
}

bool iso_search(const OgPoset& u, const OgPoset& v, const std::vector<std::uint64_t>& su,
                const std::vector<std::uint64_t>& sv, std::vector<int>& order, std::size_t pos,
                std::vector<int>& assign, std::vector<char>& used,
                const std::function<bool(const std::vector<int>&)>& on_found) {
    if (pos == order.size()) return on_found(assign);
    int x = order[pos];
    for (std::size_t c = 0; c < v.size(); ++c) {
        if (used[c] || sv[c] != su[static_cast<std::size_t>(x)]) continue;
        int cand = static_cast<int>(c);
        if (v.dim_of(cand) != u.dim_of(x)) continue;
        bool ok = true;
        for (int a = 0; a < 2 && ok; ++a) {
            const auto& fs = u.faces(x, static_cast<Sign>(a));
            const auto& gs = v.faces(cand, static_cast<Sign>(a));
            if (fs.size() != gs.size()) { ok = false; break; }
            std::vector<int> mapped;
            for (int y : fs) mapped.push_back(assign[static_cast<std::size_t>(y)]);
            std::sort(mapped.begin(), mapped.end());
            if (mapped != gs) ok = false;
        }
        if (!ok) continue;
        assign[static_cast<std::size_t>(x)] = cand;
        used[c] = 1;
        if (iso_search(u, v, su, sv, order, pos + 1, assign, used, on_found)) return true;
        used[c] = 0;
        assign[static_cast<std::size_t>(x)] = -1;
    }
    return false;
}

}  // namespace

std::optional<MolMap> find_isomorphism(const OgPtr& u, const OgPtr& v) {
    if (u->size() != v->size() || u->dim() != v->dim()) return std::nullopt;
    auto su = signatures(*u), sv = signatures(*v);
    {
        auto a = su, b = sv;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) return std::nullopt;
    }
    std::vector<int> order(u->size());
    for (std::size_t i = 0; i < u->size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u->dim_of(a) < u->dim_of(b); });
    std::vector<int> assign(u->size(), -1);
    std::vector<char> used(v->size(), 0);
    std::optional<MolMap> out;
    iso_search(*u, *v, su, sv, order, 0, assign, used, [&](const std::vector<int>& a) {
        out = MolMap{u, v, a};
        return true;
    });
    return out;
}

int count_automorphisms(const OgPtr& u, int limit) {
    auto su = signatures(*u);
    std::vector<int> order(u->size());
    for (std::size_t i = 0; i < u->size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u->dim_of(a) < u->dim_of(b); });
    std::vector<int> assign(u->size(), -1);
    std::vector<char> used(u->size(), 0);
    int found = 0;
    iso_search(*u, *u, su, su, order, 0, assign, used, [&](const std::vector<int>&) {
        ++found;
        return found >= limit;
    });
    return found;
}

}  // namespace dsets
