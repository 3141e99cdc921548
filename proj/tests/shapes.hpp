#pragma once

// Shared shape builders and independent oracles for the test suites.

#include <random>
#include <set>

#include "dsets/molecule.hpp"

namespace shapes {

using namespace dsets;

inline Molecule arrow() { return cell_ext(point(), point()).whole; }

inline Molecule globe(int dim) {
    Molecule g = point();
    for (int i = 0; i < dim; ++i) g = cell_ext(g, g).whole;
    return g;
}

// Path of n arrows glued head to tail.
inline Molecule path(int n) {
    Molecule p = arrow();
    for (int i = 1; i < n; ++i) p = paste(p, arrow(), 0).whole;
    return p;
}

// Brute-force downward closure over plain sets.
inline std::set<int> oracle_closure(const OgPoset& p, std::set<int> s) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::set<int> next = s;
        for (int x : s)
            for (int a = 0; a < 2; ++a)
                for (int y : p.faces(x, static_cast<Sign>(a)))
                    if (next.insert(y).second) changed = true;
        s = std::move(next);
    }
    return s;
}

// Literal reading of the boundary formula over plain sets.
inline std::set<int> oracle_boundary(const OgPoset& p, const std::set<int>& u, int n, Sign a) {
    std::set<int> seed;
    if (n < 0) return seed;
    for (int x : u) {
        if (p.dim_of(x) == n) {
            bool ok = true;
            for (int c : p.cofaces(x, flip(a)))
                if (u.count(c)) { ok = false; break; }
            if (ok) seed.insert(x);
        } else if (p.dim_of(x) < n) {
            bool is_max = true;
            for (int s = 0; s < 2 && is_max; ++s)
                for (int c : p.cofaces(x, static_cast<Sign>(s)))
                    if (u.count(c)) { is_max = false; break; }
            if (is_max) seed.insert(x);
        }
    }
    return oracle_closure(p, seed);
}

inline std::set<int> to_set(const Bitset& b) {
    std::set<int> out;
    for (int i : b.to_vector()) out.insert(i);
    return out;
}

inline Bitset to_bitset(const OgPoset& p, const std::set<int>& s) {
    Bitset b(p.size());
    for (int x : s) b.set(static_cast<std::size_t>(x));
    return b;
}

// Seeded random molecule generator used by property tests and the acceptance
// corpus: grows shapes by pasting, cellular extension and cylinders.
class MoleculeGen {
public:
    explicit MoleculeGen(unsigned seed, int max_dim = 3, std::size_t max_size = 60)
        : rng_(seed), max_dim_(max_dim), max_size_(max_size) {}

    std::mt19937& rng() { return rng_; }

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    // A random round molecule of dimension exactly d.
    Molecule round_molecule(int d) {
        if (d == 0) return point();
        Molecule lower = round_molecule(d - 1);
        Molecule cell = cell_ext(lower, lower).whole;
        int extra = pick(3);
        for (int i = 0; i < extra; ++i) {
            if (cell.size() > max_size_) break;
            switch (pick(3)) {
                case 0: {  // vertical composite with a parallel cell
                    Molecule in = boundary_molecule(cell, d - 1, Sign::Minus);
                    Molecule out = boundary_molecule(cell, d - 1, Sign::Plus);
                    Molecule other = cell_ext(out, out).whole;
                    (void)in;
                    cell = paste(cell, other, d - 1).whole;
                    break;
                }
                case 1: {  // unit padding through a cylinder
                    Cylinder cy = partial_gray_cylinder(cell, cell.boundary_both_set());
                    if (cy.cyl.dim() == cell.dim() + 1 && cy.cyl.size() <= max_size_ && d < max_dim_) {
                        // keep dimension: take the input boundary of the cylinder
                        cell = boundary_molecule(cy.cyl, cell.dim(), Sign::Minus);
                    }
                    break;
                }
                default: break;
            }
        }
        return cell;
    }

    // A random (not necessarily round) molecule of dimension <= d.
    Molecule molecule(int d) {
        Molecule m = round_molecule(d);
        int extra = pick(3);
        for (int i = 0; i < extra; ++i) {
            if (m.size() > max_size_) break;
            int k = pick(std::max(1, m.dim()));
            Molecule b = boundary_molecule(m, k, Sign::Plus);
            if (b.dim() < k) continue;
            try {
                m = paste(m, b.dim() == 0 ? arrow() : cell_ext(b, b).whole, k).whole;
            } catch (const KernelError&) {
            }
        }
        return m;
    }

private:
    std::mt19937 rng_;
    int max_dim_;
    std::size_t max_size_;
};

}  // namespace shapes
