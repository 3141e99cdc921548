#pragma once

#include <functional>
#include <optional>

#include "dsets/context.hpp"

namespace dsets {

// A certified equivalence together with lazily computed weak-invertibility
// materials: a chosen inverse and invertors with unit targets,
//   z : e # e* => eps(bd^- e),     h : eps(bd^+ e) => e* # e.
// Diagrams built from degenerate cells carry their own degeneracy witness,
// and their materials are plain reverses and invertors; composite materials
// are only materialised on demand.
class RichEquiv;

struct Materials {
    RichEquiv* inverse = nullptr;
    RichEquiv* z = nullptr;
    RichEquiv* h = nullptr;
};

class RichEquiv {
public:
    RichEquiv() = default;
    RichEquiv(Equiv e, std::function<Materials(const RichEquiv&)> make);

    bool valid() const { return static_cast<bool>(cell_); }
    const Equiv& equiv() const { return cell_->e; }
    const Diagram& d() const { return cell_->e.d; }
    const CertPtr& cert() const { return cell_->e.cert; }

    RichEquiv inverse() const;
    RichEquiv invertor_z() const;  // e # e* => eps(bd^- e)
    RichEquiv invertor_h() const;  // eps(bd^+ e) => e* # e

    const DegeneracyWitness* witness() const;
    void set_witness(DegeneracyWitness w);

private:
    struct Cell {
        Equiv e;
        std::function<Materials(const RichEquiv&)> make;
        std::optional<DegeneracyWitness> witness;
        std::mutex mu;
        std::shared_ptr<RichEquiv> inverse, z, h;
        bool made = false;
    };
    std::shared_ptr<Cell> cell_;
    void force() const;
};

// Degenerate round diagram: inverse = reverse, invertors = zeta/eta.
RichEquiv rich_degenerate(const DegeneracyWitness& w);
RichEquiv rich_refl(const Diagram& u);  // eps u

// Vertical composite (plain top pasting). Witnessed factors over a common
// base merge into a witnessed composite.
RichEquiv rich_trans(const RichEquiv& a, const RichEquiv& b);

// The pushforward component eps(ambient) #_vsub h (or over an arbitrary
// witnessed degenerate ambient). When h is witnessed the component is itself
// degenerate.
RichEquiv rich_subdiag(const Diagram& ambient, const Bitset& vsub, const RichEquiv& h);
RichEquiv rich_subdiag_over(const DegeneracyWitness& ambient, const Bitset& glued, const RichEquiv& h);

// Weak inversion: the stored inverse, with swapped materials.
RichEquiv rich_sym(const RichEquiv& a);

// Apply a context (as a morphism of omega-graphs) to a certified equivalence,
// transforming witnesses and certificates structurally.
RichEquiv context_apply_rich(const CtxPtr& h, const RichEquiv& e);

// Rich wrapper deriving materials from the certificate structure; materials
// fail on demand when the certificate shape carries none.
RichEquiv rich_from_cert(const Equiv& e);

// The canonical position of a pasted factor: subset of the composite.
Bitset incl_to_subset(const std::vector<int>& incl, std::size_t whole_size);

}  // namespace dsets
