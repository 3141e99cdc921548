#pragma once

#include <string>
#include <unordered_map>

#include "dsets/molecule.hpp"

namespace dsets {

class Presentation;
class Diagram;
using PresPtr = std::shared_ptr<const Presentation>;

// A diagram in a finitely presented diagrammatic set: a molecule together
// with a total labelling of its elements by generator ids. The labelling
// must satisfy the morphism condition (every lower set factors through the
// labelling generator's atom, via a surjective cartesian map).
class Diagram {
public:
    Diagram() = default;

    // Fast path for internal constructions whose validity is structural
    // (pastings of valid diagrams, tau pullbacks, restrictions).
    static Diagram trusted(Molecule shape, std::vector<int> labels, PresPtr pres);
    // Full recursive validation of the morphism condition.
    static Diagram validated(Molecule shape, std::vector<int> labels, PresPtr pres);

    bool valid() const { return shape_.valid(); }
    const Molecule& shape() const { return shape_; }
    const std::vector<int>& labels() const { return labels_; }
    int label(int e) const { return labels_[static_cast<std::size_t>(e)]; }
    const PresPtr& pres() const { return pres_; }
    int dim() const { return shape_.dim(); }
    std::size_t size() const { return shape_.size(); }

    bool degenerate_at(int e) const;
    bool round() const { return shape_.is_round(); }

private:
    Molecule shape_;
    std::vector<int> labels_;
    PresPtr pres_;
};

struct Generator {
    std::string name;
    int dim = 0;
    Diagram input, output;  // invalid (default) when dim == 0
    Molecule atom_shape;
    std::vector<int> atom_labels;
};

// Finitely presented diagrammatic set: an ordered list of generators, each
// with round, parallel input/output diagrams over the earlier ones.
class Presentation : public std::enable_shared_from_this<Presentation> {
public:
    static std::shared_ptr<Presentation> create();

    int add_generator0(const std::string& name);
    int add_generator(const std::string& name, const Diagram& input, const Diagram& output);

    std::size_t size() const { return gens_.size(); }
    const Generator& gen(int id) const { return gens_[static_cast<std::size_t>(id)]; }
    int id_of(const std::string& name) const;  // -1 when absent
    PresPtr self() const { return shared_from_this(); }

    // The generator as a cell diagram of its atom shape.
    Diagram cell(int id) const;

private:
    std::vector<Generator> gens_;
    std::unordered_map<std::string, int> by_name_;
};

// --- validation --------------------------------------------------------------

struct ValidationReport {
    bool ok = true;
    int first_bad = -1;
    std::string trace;
};

// Search for the factorisation p_x: cl{x} ->> atom(label x) for an element of
// a diagram; nullopt when none exists.
std::optional<MolMap> factor_through_atom(const Diagram& d, int x);

ValidationReport validate_diagram(const Diagram& d);

// --- structure ---------------------------------------------------------------

struct SubDiagram {
    Diagram diagram;
    std::vector<int> old_of_new, new_of_old;
};

SubDiagram restrict_diagram(const Diagram& d, const Bitset& members);
Diagram boundary_diagram(const Diagram& d, int n, Sign a);
Diagram boundary_diagram(const Diagram& d, Sign a);

bool diagram_equal(const Diagram& a, const Diagram& b);  // unique iso + matching labels
bool parallel(const Diagram& a, const Diagram& b);

// Label- and orientation-preserving embedding of `small` onto a closed subset
// of `big` (faces map exactly). First match in a deterministic search order.
std::optional<std::vector<int>> embed_diagram(const Diagram& small, const Diagram& big);
// As embed_diagram, but the image is constrained to a given closed subset.
std::optional<std::vector<int>> embed_diagram_into(const Diagram& small, const Diagram& big, const Bitset& within);

struct DiagPasting {
    Diagram whole;
    std::vector<int> incl_left, incl_right;
};

DiagPasting paste_diagrams(const Diagram& u, const Diagram& v, int k);
DiagPasting paste_diagrams_sub(const Diagram& u, const Diagram& v, int k, const std::vector<int>& iota,
                               bool side_left);

// Vertical pasting at the top dimension along the whole boundary iso.
DiagPasting paste_top(const Diagram& u, const Diagram& v);

struct DiagSubstitution {
    Diagram whole;
    std::vector<int> kept;
    std::vector<int> incl_w;
};

DiagSubstitution substitute_diagram(const Diagram& u, const Diagram& w, const Bitset& v_subset);

// --- morphisms ----------------------------------------------------------------

struct PresentationMorphism {
    PresPtr src, tgt;
    std::vector<int> gen_map;
};

// Builds and validates a morphism: dimension-preserving and compatible with
// generator boundaries.
PresentationMorphism make_morphism(const PresPtr& src, const PresPtr& tgt, const std::vector<int>& gen_map);

Diagram apply_morphism(const PresentationMorphism& f, const Diagram& d);

}  // namespace dsets
