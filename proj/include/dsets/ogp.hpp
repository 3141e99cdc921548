#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dsets/common.hpp"

namespace dsets {

// Orientation of a face: input (-) or output (+).
enum class Sign : int { Minus = 0, Plus = 1 };
inline Sign flip(Sign a) { return a == Sign::Minus ? Sign::Plus : Sign::Minus; }

// An oriented graded poset: finitely many elements, each carrying a dimension
// and a bipartitioned set of faces (the covered elements). Element ids are
// the indices 0..size-1, fixed at construction; all structures built on top
// reference elements by id. Instances are immutable after construction and
// shared through OgPtr.
class OgPoset {
public:
    struct Elem {
        int dim = 0;
        std::vector<int> faces[2];    // faces[Minus], faces[Plus]; sorted
        std::vector<int> cofaces[2];  // derived: x in cofaces[a](y) iff y in faces[a](x)
    };

    // Validates gradedness, disjoint bipartition, both orientations present in
    // positive dimension, and acyclicity of the covering relation.
    static std::shared_ptr<const OgPoset> make(std::vector<Elem> elems);

    std::size_t size() const { return elems_.size(); }
    int dim() const { return dim_; }
    const Elem& elem(int i) const { return elems_[static_cast<std::size_t>(i)]; }
    int dim_of(int i) const { return elems_[static_cast<std::size_t>(i)].dim; }
    const std::vector<int>& faces(int i, Sign a) const {
        return elems_[static_cast<std::size_t>(i)].faces[static_cast<int>(a)];
    }
    const std::vector<int>& cofaces(int i, Sign a) const {
        return elems_[static_cast<std::size_t>(i)].cofaces[static_cast<int>(a)];
    }
    bool is_face(int y, int x) const;  // y covered by x (either orientation)

    Bitset all() const;
    Bitset grade(int n) const;                 // elements of dimension n
    Bitset maximal(const Bitset& u) const;     // elements of u with no coface in u
    Bitset closure(const Bitset& s) const;     // downward closure
    bool is_closed(const Bitset& s) const;

    // The n-boundary of a closed subset u, computed inside u:
    //   cl{ x in gr_n(u) | every coface of x in u has x as an a-face }
    //   union cl{ maximal elements of u of dimension < n }.
    // n = -1 gives the empty set; n >= dim(u) gives u back.
    Bitset boundary(const Bitset& u, int n, Sign a) const;
    Bitset boundary_both(const Bitset& u, int n) const;
    // Boundary at the default level dim(u) - 1.
    Bitset boundary(const Bitset& u, Sign a) const;
    Bitset boundary_both(const Bitset& u) const;

    int dim_of_subset(const Bitset& u) const;  // -1 for the empty set

    bool is_globular(const Bitset& u) const;
    bool is_round(const Bitset& u) const;

    // Interior: u minus boundary_both(u).
    Bitset interior(const Bitset& u) const;

    // Deterministic key: the full face structure, used for memo tables.
    std::string structure_key() const;

private:
    OgPoset() = default;
    std::vector<Elem> elems_;
    int dim_ = -1;
};

using OgPtr = std::shared_ptr<const OgPoset>;

// Extract the closed subset u as a poset of its own. Elements are reindexed
// in increasing order of their id in the parent; old_of_new/new_of_old record
// the correspondence.
struct SubPoset {
    OgPtr poset;
    std::vector<int> old_of_new;
    std::vector<int> new_of_old;  // -1 outside the subset
};
SubPoset sub_poset(const OgPtr& parent, const Bitset& members);

// Reverse the orientation of faces of all elements whose dimension lies in
// dims. Involutive; underlying poset unchanged.
OgPtr dual(const OgPtr& p, const std::vector<int>& dims);
OgPtr dual_top(const OgPtr& p);  // dual at dims = {dim p}

// A map between oriented graded posets given by a total assignment on
// elements. Flags are computed on demand by the check functions below.
struct MolMap {
    OgPtr src, tgt;
    std::vector<int> assign;

    int operator()(int i) const { return assign[static_cast<std::size_t>(i)]; }
    Bitset image(const Bitset& s) const;
    Bitset image_all() const;
};

MolMap identity_map(const OgPtr& p);
MolMap compose(const MolMap& second, const MolMap& first);  // second . first

bool is_order_preserving(const MolMap& f);
bool is_dim_preserving(const MolMap& f);
bool is_surjective(const MolMap& f);
bool is_inclusion(const MolMap& f);  // injective, dim- and orientation-preserving

// The map condition from the background theory: order-preserving,
// f(bd^n_a cl{x}) = bd^n_a cl{f(x)} for all x, n, a, and each restriction to
// bd^n_a cl{x} final onto its image (zig-zag condition, checked literally).
bool check_map(const MolMap& f);
// check_map plus: the underlying poset map is a Grothendieck fibration.
bool check_cartesian(const MolMap& f);

// Order preservation plus the Grothendieck fibration condition alone, without
// the orientation-aware map condition. Inverted-cylinder projections satisfy
// this but not check_map; their composites with a base degeneracy do.
bool check_poset_fibration(const MolMap& f);

// The unique orientation- and dimension-preserving isomorphism between u and
// v, if one exists. Deterministic backtracking anchored on iterated
// dimension/face-count signatures.
std::optional<MolMap> find_isomorphism(const OgPtr& u, const OgPtr& v);

// Number of automorphisms, counting at most `limit`. Molecules are rigid, so
// this returns 1 on every valid molecule.
int count_automorphisms(const OgPtr& u, int limit = 2);

}  // namespace dsets
