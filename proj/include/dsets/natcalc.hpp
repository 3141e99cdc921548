#pragma once

#include "dsets/rich.hpp"

namespace dsets {

struct NatExpr;
using NatPtr = std::shared_ptr<const NatExpr>;

// Expression calculus for natural equivalences of round contexts. Each node
// knows its endpoint contexts and evaluates components on demand; naturality
// witnesses are produced by constructor-directed recursion.
struct NUnitFamily {};  // components eps(apply(src, a))
struct NLeftUnitorFamily {
    Bitset vsub;  // in the pair's input diagram
};
struct NRightUnitorFamily {
    Bitset vsub;  // in the pair's output diagram
};
struct NHigherUnitorFamily {
    int k = 0;
    Bitset vsub;  // in the pair's input diagram at level k
    bool left = true;
};
struct NPushforward {
    CtxPtr base;
    ContextSubdiagram cs;
    RichEquiv h;
};
struct NComposeNat {
    NatPtr a, b;
};
struct NLeftCtx {
    CtxPtr h;
    NatPtr t;
};
struct NRightCtx {
    NatPtr t;
    CtxPtr h;
};
struct NWeakInv {
    NatPtr t;
};
struct NDerived {
    std::string rule;  // eversion / rounding-unit / rounding-functor / ...
    NatPtr payload;
};

struct NatExpr {
    std::variant<NUnitFamily, NLeftUnitorFamily, NRightUnitorFamily, NHigherUnitorFamily, NPushforward,
                 NComposeNat, NLeftCtx, NRightCtx, NWeakInv, NDerived>
        node;
    CtxPtr src, tgt;     // parallel round contexts
    Diagram v, w;        // the index pair
};

// constructors
NatPtr nat_refl(const CtxPtr& src, const CtxPtr& tgt);  // eps family between extensionally equal contexts
NatPtr nat_unit_family(const Diagram& v, const Diagram& w);
NatPtr nat_left_unitor(const Diagram& v, const Diagram& w, const Bitset& vsub);
NatPtr nat_right_unitor(const Diagram& v, const Diagram& w, const Bitset& vsub);
NatPtr nat_higher_unitor(const Diagram& v, const Diagram& w, int k, const Bitset& vsub, bool left);
NatPtr nat_pushforward(const CtxPtr& base, const ContextSubdiagram& cs, const RichEquiv& h);
NatPtr nat_compose(const NatPtr& a, const NatPtr& b);
NatPtr nat_left_ctx(const CtxPtr& h, const NatPtr& t);
NatPtr nat_right_ctx(const NatPtr& t, const CtxPtr& h);
NatPtr nat_weak_inv(const NatPtr& t);

// Component at an index diagram, with its certificate and invertibility
// materials; endpoints are checked exactly against the stored contexts.
RichEquiv nat_component(const NatPtr& t, const Diagram& a);

// The next-level naturality witness at a parallel pair of indices.
NatPtr naturality_witness(const NatPtr& t, const Diagram& a, const Diagram& b);

// --- the rounding lemmas (one step) -----------------------------------------

// G . F_{a,b}  ==>  G . R_{a,b}F
NatPtr one_step_rounding(const CtxPtr& g, const CtxPtr& f, const Diagram& a, const Diagram& b);

struct CtxWithNat {
    CtxPtr ctx;
    NatPtr expr;
};

// Lemma: eversion of a natural equivalence along a parallel pair.
//   theta : F ==> G  gives  C and  R_{a,b}F ==> C . R_{a,b}G.
CtxWithNat eversion(const NatPtr& theta, const Diagram& a, const Diagram& b);

// Lemma: rounding unitality. J with  -  ==>  J . R_{a,b}I.
CtxWithNat rounding_unit(const Diagram& v, const Diagram& w, const Diagram& a, const Diagram& b);

// Lemma: rounding functoriality. M with R_{a,b}(GF) ==> M . (R_{a',b'}G) . R_{a,b}F.
CtxWithNat rounding_functor(const CtxPtr& f, const CtxPtr& g, const Diagram& a, const Diagram& b);

// --- weak inverses of contexts -------------------------------------------------

struct ContextInverse {
    CtxPtr inverse;
    NatPtr to_id;    // E* . E  ==>  Id
    NatPtr from_id;  // E . E*  ==>  Id
};

// Weak inverse of a weakly invertible trim context (structural recursion).
ContextInverse trim_inverse(const CtxPtr& e);

// Left divisor of a weakly invertible context: C with C . E ==> Id.
CtxWithNat left_inverse_context(const CtxPtr& e);

// Theorem: every weakly invertible round context has a weakly invertible
// weak inverse, with both connecting natural equivalences.
ContextInverse weak_inverse_context(const CtxPtr& e);

// --- division ---------------------------------------------------------------------

struct DivisionResult {
    Diagram solution;   // a = E* b
    RichEquiv witness;  // (E E*) b => b, a concrete certified equivalence
};

DivisionResult divide(const CtxPtr& e, const Diagram& b);

// Weak-uniqueness path: a' = E*(E a) together with a certified a' => a.
struct RoundTrip {
    Diagram image;      // E a
    Diagram back;       // E* (E a)
    RichEquiv witness;  // back => a
};
RoundTrip divide_roundtrip(const CtxPtr& e, const Diagram& a);

}  // namespace dsets
