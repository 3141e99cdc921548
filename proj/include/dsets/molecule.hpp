#pragma once

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "dsets/ogp.hpp"

namespace dsets {

struct MoleculeExpr;
using ExprPtr = std::shared_ptr<const MoleculeExpr>;

// Construction witness for a molecule, following the inductive clauses.
// Shapes produced by functorial operations (cylinders, Gray products, duals,
// substitution) carry an Imported witness; recognition can replace it by a
// clause-level one on demand.
struct MoleculeExpr {
    enum class Kind { Point, Paste, CellExt, PasteSub, Imported };
    Kind kind = Kind::Imported;
    ExprPtr left, right;
    int k = -1;
    bool sub_on_left = true;      // PasteSub: side of the submolecule pasting
    std::vector<int> iota;        // PasteSub: boundary element map
    std::string imported_tag;     // Imported: which operation produced it

    static ExprPtr point();
    static ExprPtr paste(ExprPtr l, ExprPtr r, int k);
    static ExprPtr cell_ext(ExprPtr l, ExprPtr r);
    static ExprPtr paste_sub(ExprPtr l, ExprPtr r, int k, bool on_left, std::vector<int> iota);
    static ExprPtr imported(std::string tag);
};

std::string expr_to_string(const ExprPtr& e);

// A validated molecule: an oriented graded poset together with a construction
// witness. Validation checks globularity and the regularity condition that
// every lower set is round with a full boundary sphere; clause-level
// membership is certified separately by is_molecule.
class Molecule {
public:
    Molecule() = default;
    static Molecule wrap(OgPtr p, ExprPtr e);

    bool valid() const { return static_cast<bool>(d_); }
    const OgPtr& poset() const { return d_->poset; }
    const ExprPtr& expr() const { return d_->expr; }
    int dim() const { return d_->poset->dim(); }
    std::size_t size() const { return d_->poset->size(); }

    Bitset all() const { return d_->poset->all(); }
    Bitset boundary_set(int n, Sign a) const;
    Bitset boundary_set(Sign a) const { return boundary_set(dim() - 1, a); }
    Bitset boundary_both_set(int n) const;
    Bitset boundary_both_set() const { return boundary_both_set(dim() - 1); }

    bool is_round() const;
    bool is_globular() const;
    bool is_atom() const;  // has a greatest element

    // Identity is per-instance; isomorphic molecules are related only through
    // explicit maps.
    bool same_instance(const Molecule& o) const { return d_.get() == o.d_.get(); }

private:
    struct Data {
        OgPtr poset;
        ExprPtr expr;
        mutable std::mutex mu;
        mutable std::optional<bool> round;
        mutable std::optional<int> lydim;
    };
    std::shared_ptr<const Data> d_;
    friend int layering_dimension(const Molecule&);
};

// Molecule cut out of a closed subset, with the id correspondence.
struct SubMol {
    Molecule mol;
    std::vector<int> old_of_new;
    std::vector<int> new_of_old;
};
SubMol molecule_from_subset(const Molecule& parent, const Bitset& members, const char* tag = "subset");

Molecule boundary_molecule(const Molecule& u, int n, Sign a);
Molecule boundary_molecule(const Molecule& u, Sign a);

std::optional<MolMap> mol_iso(const Molecule& a, const Molecule& b);

// --- constructors ---------------------------------------------------------

Molecule point();

// Result of a gluing constructor: the molecule plus the element maps of the
// two factors into it.
struct Pasting {
    Molecule whole;
    std::vector<int> incl_left, incl_right;
};

// Pasting U #k V along the unique iso bd_k^+ U ~ bd_k^- V. Supports k up to
// max(dim U, dim V) - 1; when k >= dim of one factor the pasting is the
// absorption of that factor into the other's boundary.
Pasting paste(const Molecule& u, const Molecule& v, int k);

// Pasting at a submolecule. side_left: iota maps bd_k^+ U into V (elementwise
// into bd_k^- V); otherwise iota maps bd_k^- V into U.
Pasting paste_at_submolecule(const Molecule& u, const Molecule& v, int k, const std::vector<int>& iota,
                             bool side_left);

// Cellular extension U => V: glue the boundary spheres and add a greatest
// element. Requires U, V round of equal dimension with matching boundaries.
Pasting cell_ext(const Molecule& u, const Molecule& v);

// Substitution of W for the rewritable closed subset V of U.
struct Substitution {
    Molecule whole;
    std::vector<int> kept;      // U ids kept -> new ids (-1 for excised interior)
    std::vector<int> incl_w;    // W ids -> new ids
};
Substitution substitute(const Molecule& u, const Molecule& w, const Bitset& v_subset);

// --- layerings ------------------------------------------------------------

struct Layering {
    int k = -1;
    std::vector<int> order;        // maximal elements of dimension > k, in layer order
    std::vector<Bitset> layers;    // layer i = frontier(i-1) union cl(order[i])
    std::vector<Bitset> frontiers; // frontier 0 = bd_k^- U, frontier i = bd_k^+ layer i
};

std::vector<Layering> layerings(const Molecule& u, int k);
std::optional<Layering> first_layering(const Molecule& u, int k);
int layering_dimension(const Molecule& u);

// --- submolecules ---------------------------------------------------------

struct SubmoleculeInclusion {
    Bitset image;              // closed subset of the ambient molecule
    Molecule sub;              // the subset as a molecule
    std::vector<int> old_of_new, new_of_old;
    bool rewritable = false;   // same dimension as ambient and sub round
};

// Witness search for "S is a submolecule of U", by layering-guided descent.
// Returns nullopt after exhausting the node budget (Undecided), throws on a
// non-closed subset.
std::optional<SubmoleculeInclusion> find_submolecule(const Molecule& u, const Bitset& s, int budget = 20000);

// The inclusion data for the whole of u (identity witness).
SubmoleculeInclusion whole_submolecule(const Molecule& u);

// --- functorial constructions ---------------------------------------------

Molecule gray_product(const Molecule& u, const Molecule& v);

// Partial Gray cylinder arrow (x)_K U and its projection tau_K. The copies
// table records, per U element x: the ids of (0-,x),(0+,x),(1,x), or -1s with
// at_k[x] set when x lies in K.
struct Cylinder {
    Molecule cyl;
    MolMap tau;
    Bitset k_set;                            // K, in U ids
    std::vector<std::array<int, 3>> copies;  // bot, top, mid ids per U element (-1 if in K)
    std::vector<int> at_k;                   // id of (x) per U element (-1 outside K)
};

Cylinder partial_gray_cylinder(const Molecule& u, const Bitset& k_set);
Cylinder inverted_cylinder(const Molecule& u, const Bitset& k_set, bool left);

// --- recognition ----------------------------------------------------------

// Search for a construction witness over the molecule clauses; memoized on
// the face structure. Intended for desk-scale posets.
std::optional<ExprPtr> is_molecule(const OgPtr& p);

// Re-evaluate a construction witness into a fresh poset (sanity replay).
OgPtr eval_expr(const ExprPtr& e);

}  // namespace dsets
