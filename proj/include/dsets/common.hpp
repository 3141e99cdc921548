#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsets {

// Error vocabulary shared by the whole kernel. Operations throw KernelError
// with one of these kinds; the CLI maps them to exit codes.
enum class Err {
    InvalidElement,
    NotClosed,
    NoBoundaryIso,
    NotRound,
    NotGlobular,
    DimensionMismatch,
    NotSubmolecule,
    NotRewritable,
    BoundaryMismatch,
    NotMolecule,
    KNotInBoundary,
    LabelMismatch,
    NotParallel,
    UnmappedGenerator,
    NotDegenerate,
    TypeMismatch,
    IllFormedEquation,
    UnsupportedCert,
    MissingCellCert,
    ChainMismatch,
    MissingInverse,
    NotWeaklyInvertible,
    DimensionTooLow,
    BadCodimension,
    BudgetExhausted,
    Undecided,
    ParseError,
    Internal,
};

const char* err_name(Err e);

struct KernelError : std::runtime_error {
    Err kind;
    KernelError(Err k, const std::string& msg)
        : std::runtime_error(std::string(err_name(k)) + ": " + msg), kind(k) {}
};

[[noreturn]] inline void fail(Err k, const std::string& msg) { throw KernelError(k, msg); }

inline void require(bool cond, Err k, const std::string& msg) {
    if (!cond) fail(k, msg);
}

// Fixed-universe bitset over element ids 0..n-1. Closed subsets, boundaries
// and layer frontiers are all stored this way; posets stay under a few
// hundred elements so word-parallel ops are plenty.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    std::size_t universe() const { return n_; }

    bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { w_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    void reset(std::size_t i) { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    bool any() const {
        for (auto w : w_) if (w) return true;
        return false;
    }
    bool none() const { return !any(); }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : w_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }

    Bitset& operator|=(const Bitset& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
        return *this;
    }
    Bitset& operator&=(const Bitset& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
        return *this;
    }
    Bitset& operator-=(const Bitset& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
        return *this;
    }

    friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }
    friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
    friend Bitset operator-(Bitset a, const Bitset& b) { return a -= b; }

    bool operator==(const Bitset& o) const { return n_ == o.n_ && w_ == o.w_; }
    bool operator!=(const Bitset& o) const { return !(*this == o); }

    bool subset_of(const Bitset& o) const {
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & ~o.w_[i]) return false;
        return true;
    }
    bool intersects(const Bitset& o) const {
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & o.w_[i]) return true;
        return false;
    }

    std::vector<int> to_vector() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < n_; ++i)
            if (get(i)) out.push_back(static_cast<int>(i));
        return out;
    }

    std::size_t hash() const {
        std::size_t h = n_;
        for (auto w : w_) h = h * 1000003u ^ std::hash<std::uint64_t>{}(w);
        return h;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

struct BitsetHash {
    std::size_t operator()(const Bitset& b) const { return b.hash(); }
};

}  // namespace dsets
