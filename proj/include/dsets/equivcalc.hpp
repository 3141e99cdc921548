#pragma once

#include <map>
#include <variant>

#include "dsets/structcells.hpp"

namespace dsets {

struct EquivCert;
using CertPtr = std::shared_ptr<const EquivCert>;

// Position of a same-dimension pasting left #_pos right: either the plain
// pasting along the whole boundary iso (iota empty) or a pasting at a
// subdiagram per the paste_diagrams_sub convention.
struct PastePos {
    int k = -1;
    std::vector<int> iota;
    bool side_left = true;
};

Diagram rebuild_pasting(const Diagram& left, const Diagram& right, const PastePos& pos);

// Finite-depth certificate that a round diagram is an equivalence.
//
// ByDegeneracy is the axiom (degenerate round diagrams are equivalences);
// ByWeakInverse / ByBiInverse carry the coinductive invertibility data;
// Compose and Divide are the two 2-out-of-3 closure rules, with the mediating
// diagram stored explicitly; Assumed marks a hypothesis, accepted only in
// assumption mode.
struct CDegeneracy {
    DegeneracyWitness w;
};
struct CWeakInverse {
    Diagram inverse;
    Diagram z;  // e # e* => eps(bd^- e)
    CertPtr zc;
    Diagram h;  // eps(bd^+ e) => e* # e
    CertPtr hc;
};
struct CBiInverse {
    Diagram left_inv, right_inv;
    Diagram z;  // e # e^L => eps(bd^- e)
    CertPtr zc;
    Diagram h;  // eps(bd^+ e) => e^R # e
    CertPtr hc;
};
struct CCompose {
    Diagram left, right;
    CertPtr leftc, rightc;
    PastePos pos;
};
struct CDivide {
    Diagram mediator;  // (other # e) => whole, or (e # other) => whole
    CertPtr medc;
    Diagram other, whole;
    CertPtr otherc, wholec;
    PastePos pos;
    bool e_on_left = false;
};
struct CAssumed {
    std::string tag;
};

struct EquivCert {
    std::variant<CDegeneracy, CWeakInverse, CBiInverse, CCompose, CDivide, CAssumed> node;
};

CertPtr cert_degeneracy(DegeneracyWitness w);
CertPtr cert_assumed(std::string tag);
CertPtr cert_weak_inverse(Diagram inverse, Diagram z, CertPtr zc, Diagram h, CertPtr hc);
CertPtr cert_bi_inverse(Diagram l, Diagram r, Diagram z, CertPtr zc, Diagram h, CertPtr hc);
CertPtr cert_compose(Diagram left, CertPtr leftc, Diagram right, CertPtr rightc, PastePos pos);
CertPtr cert_divide(Diagram mediator, CertPtr medc, Diagram other, CertPtr otherc, Diagram whole, CertPtr wholec,
                    PastePos pos, bool e_on_left);

int cert_depth(const CertPtr& c);

// --- checking -------------------------------------------------------------

enum class Verdict { Accepted, AcceptedWithAssumptions, Rejected, BudgetExhausted };

struct CheckResult {
    Verdict verdict = Verdict::Rejected;
    std::string trace;
    bool ok() const { return verdict == Verdict::Accepted || verdict == Verdict::AcceptedWithAssumptions; }
};

CheckResult check_cert(const Diagram& e, const CertPtr& c, int depth_budget, bool assume_mode = false);

// --- construction ----------------------------------------------------------

// A certified equivalence: the diagram together with its certificate.
struct Equiv {
    Diagram d;
    CertPtr cert;
};

CertPtr cert_for_degenerate(const DegeneracyWitness& w);
// One-step unrolling of a degeneracy certificate into weak-inverse form.
CertPtr expand_degeneracy(const CertPtr& c);

// Componentwise weak inverse choice: reverses for degeneracies, stored data
// for weak inverses, structural recursion otherwise. Throws MissingInverse
// when no inverse can be extracted.
Equiv extract_inverse(const Diagram& e, const CertPtr& c);

// Transport along a certified equivalence bridge k : e => t with t certified:
// produces a certificate for e (an instance of the divide rule).
CertPtr cert_transport(const Diagram& e, const Equiv& bridge, const Equiv& t);

// --- equations and lax solutions ---------------------------------------------

// A well-formed equation e #_i x = u (left) or x #_i e = u (right), encoded by
// the subdiagram j : bd^- e => bd^- u (resp. bd^+ e => bd^+ u), stored as an
// element map over e's shape (-1 off the boundary).
struct EquationSpec {
    bool left_side = true;
    std::vector<int> j;
    Diagram u;
};

struct LaxSolution {
    Diagram solution;  // u'
    Equiv lax;         // h : e # u' => u
    Equiv colax;       // h* : u => e # u'
};

LaxSolution solve_lax(const Equiv& e, const EquationSpec& eq);

// --- combinators ----------------------------------------------------------------

Equiv refl(const Diagram& u);                                   // eps u, by degeneracy
Equiv trans(const Equiv& a, const Equiv& b);                    // vertical composite
Equiv sym(const Equiv& a);                                      // weak inverse
Equiv subdiag_equiv(const Diagram& u, const Bitset& vsub, const Equiv& h);  // eps u #_i h

// Certificate for a round diagram all of whose top-dimensional cells carry
// certificates (layering argument + transport).
Equiv all_top_equivalence(const Diagram& u, const std::map<int, CertPtr>& cell_certs);

// Pastes two certified equivalences at a subdiagram position, with the
// composite certificate.
Equiv paste_equivs(const Equiv& a, const Equiv& b, const PastePos& pos);

}  // namespace dsets
