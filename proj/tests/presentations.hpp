#pragma once

// Shared presentation builders for the diagram-level test suites.

#include "dsets/structcells.hpp"
#include "shapes.hpp"

namespace presentations {

using namespace dsets;

struct Simple {
    std::shared_ptr<Presentation> pres;
    int a, b, c;        // 0-generators
    int f, g, h;        // 1-generators: f,g : a -> b, h : b -> c
    int al;             // 2-generator al : f => g
};

inline Simple simple() {
    Simple s;
    s.pres = Presentation::create();
    s.a = s.pres->add_generator0("a");
    s.b = s.pres->add_generator0("b");
    s.c = s.pres->add_generator0("c");
    auto pa = s.pres->cell(s.a);
    auto pb = s.pres->cell(s.b);
    auto pc = s.pres->cell(s.c);
    s.f = s.pres->add_generator("f", pa, pb);
    s.g = s.pres->add_generator("g", pa, pb);
    s.h = s.pres->add_generator("h", pb, pc);
    s.al = s.pres->add_generator("al", s.pres->cell(s.f), s.pres->cell(s.g));
    return s;
}

// f # h : a -> c as a 2-edge path diagram.
inline Diagram comp_fh(const Simple& s) {
    return paste_diagrams(s.pres->cell(s.f), s.pres->cell(s.h), 0).whole;
}

}  // namespace presentations
