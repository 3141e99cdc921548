#pragma once

#include "dsets/equivcalc.hpp"

namespace dsets {

struct Context;
using CtxPtr = std::shared_ptr<const Context>;

// One-hole contexts on pd X(v, w), per the five generating clauses. Left and
// right pasting leaves may carry an equivalence certificate for their pasted
// diagram; weak invertibility of a context is the presence of those
// certificates at every leaf.
struct XLeftPaste {
    Diagram u;
    std::vector<int> iota;        // bd^+ u elements -> v elements
    CertPtr cert;
    std::vector<int> cod_anchor;  // bd^- u elements -> cod_v elements
};
struct XRightPaste {
    Diagram u;
    std::vector<int> iota;        // bd^- u elements -> w elements
    CertPtr cert;
    std::vector<int> cod_anchor;  // bd^+ u elements -> cod_w elements
};
// Wrapping contexts: the hole's whole boundary is glued onto a subdiagram of
// the wrapped diagram's boundary ("- pasted into u"). These arise as the
// endpoint contexts of higher unitor families.
struct XLeftWrap {
    Diagram u;
    std::vector<int> anchor;  // v elements -> u elements inside bd^+ u
    CertPtr cert;
};
struct XRightWrap {
    Diagram u;
    std::vector<int> anchor;  // w elements -> u elements inside bd^- u
    CertPtr cert;
};
// Substitution at a context subdiagram: acts as a |-> (F a)[z' / iota_a(z)],
// the target of a context pushforward (defined below ContextSubdiagram).
struct XIdentity {};
struct XCompose {
    CtxPtr outer, inner;  // acts as outer(inner(-))
};
struct XPromote {
    CtxPtr inner;  // a context on (bd^- v, bd^+ w)
};

struct XSubstAt;

struct Context {
    std::variant<XLeftPaste, XRightPaste, XIdentity, XCompose, XPromote, XLeftWrap, XRightWrap,
                 std::shared_ptr<const XSubstAt>>
        node;
    Diagram v, w;          // domain pair
    Diagram cod_v, cod_w;  // codomain pair
    int dim = 0;           // dim v + 1
};

CtxPtr ctx_identity(const Diagram& v, const Diagram& w);
CtxPtr ctx_left_paste(const Diagram& u, const std::vector<int>& iota, const Diagram& v, const Diagram& w,
                      CertPtr cert = nullptr);
CtxPtr ctx_right_paste(const Diagram& u, const std::vector<int>& iota, const Diagram& v, const Diagram& w,
                       CertPtr cert = nullptr);
CtxPtr ctx_compose(const CtxPtr& outer, const CtxPtr& inner);
CtxPtr ctx_promote(const CtxPtr& inner, const Diagram& v, const Diagram& w);

// Left pasting along the whole boundary (iota the identity embedding).
CtxPtr ctx_left_paste_whole(const Diagram& u, const Diagram& v, const Diagram& w, CertPtr cert = nullptr);
CtxPtr ctx_right_paste_whole(const Diagram& u, const Diagram& v, const Diagram& w, CertPtr cert = nullptr);

CtxPtr ctx_left_wrap(const Diagram& u, const std::vector<int>& anchor, const Diagram& v, const Diagram& w,
                     CertPtr cert = nullptr);
CtxPtr ctx_right_wrap(const Diagram& u, const std::vector<int>& anchor, const Diagram& v, const Diagram& w,
                      CertPtr cert = nullptr);

// Application as a morphism of omega-graphs in degree > dim v - 1: a may be
// any diagram whose boundaries at the context's level equal the domain pair.
struct CtxApply {
    Diagram result;
    std::vector<int> hole_map;  // a's elements inside the result
};
CtxApply apply_context(const CtxPtr& f, const Diagram& a);
Diagram apply_ctx(const CtxPtr& f, const Diagram& a);  // result only

bool is_trim(const CtxPtr& f);
bool is_weakly_invertible(const CtxPtr& f);

std::string ctx_to_string(const CtxPtr& f);

// The pasting-diagram layering of Lemma-3.2 shape: F = l_k #_{k-1} ( ... (l_1
// #_0 - #_0 r_1) ... ) #_{k-1} r_k with dim l_i, dim r_i <= i.
struct ContextLayering {
    std::vector<Diagram> l, r;  // index 0 holds l_1 / r_1
};
ContextLayering context_layering(const CtxPtr& f);

// Rebuild the action of a layering on a diagram (used to validate layerings).
Diagram apply_layering(const ContextLayering& lay, const Diagram& a);

// The shape of the context: the layering pasted around V => W.
Molecule context_shape(const CtxPtr& f);
bool is_round_context(const CtxPtr& f);

// F = T . Promote(G) with T trim; preserves leaf certificates, so weakly
// invertible contexts factor into weakly invertible parts.
struct TrimFactorisation {
    CtxPtr trim;   // T, a composite of pasting leaves (or the identity)
    CtxPtr lower;  // G, one dimension down
};
TrimFactorisation trim_factorize(const CtxPtr& f);

// A context subdiagram: a decomposition F = u # F'(-) or F'(-) # u together
// with a subdiagram of u. Supplies, for every index diagram a, a subdiagram
// of F a at a stable position.
struct ContextSubdiagram {
    bool u_on_left = true;  // F = u # F'(-) vs F'(-) # u
    Diagram u;
    CtxPtr rest;
    Bitset sub;  // closed subset of u
    bool rewritable = false;
};

// Position of the subdiagram inside F a.
Bitset context_subdiagram_at(const ContextSubdiagram& cs, const Diagram& a);

// Rebuild the context action of a context subdiagram's decomposition.
CtxApply apply_context_subdiagram(const ContextSubdiagram& cs, const Diagram& a);

struct XSubstAt {
    CtxPtr base;            // the context being rewritten
    ContextSubdiagram cs;   // where the rewrite happens
    Diagram z_new;          // parallel replacement for the subdiagram
};
CtxPtr ctx_subst_at(const CtxPtr& base, const ContextSubdiagram& cs, const Diagram& z_new);

// The rounded higher context R_{a,b}F along a chain of parallel pairs.
CtxPtr rounded_context(const CtxPtr& f, const std::vector<std::pair<Diagram, Diagram>>& chain);

// Extensional comparison on a sample of index diagrams.
bool contexts_agree_on(const CtxPtr& f, const CtxPtr& g, const std::vector<Diagram>& samples);

}  // namespace dsets
