#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "span.hpp"

namespace alethe {

using AtomId = int32_t;
constexpr AtomId kNoAtom = -1;

// Interned atom. Global atoms are identified by name; tilde-scoped atoms get a
// fresh id per (scope instance, name) and never collide across scopes.
struct AtomInfo {
    std::string name;     // display name, without tildes
    bool scoped = false;  // created through a tilde prefix
    uint32_t scope_id = 0;
};

class AtomTable {
public:
    AtomId global(const std::string& name);
    AtomId scoped(uint32_t scope_id, const std::string& name);
    // Returns the id only if the global atom already exists.
    std::optional<AtomId> find_global(const std::string& name) const;

    const AtomInfo& info(AtomId id) const { return atoms_[static_cast<size_t>(id)]; }
    size_t size() const { return atoms_.size(); }
    uint32_t fresh_scope() { return next_scope_++; }

private:
    std::vector<AtomInfo> atoms_;
    std::unordered_map<std::string, AtomId> globals_;
    std::unordered_map<std::string, AtomId> scoped_by_key_;
    uint32_t next_scope_ = 1;
};

class Term;
using TermSeq = std::vector<Term>;

namespace detail {
struct TermNode {
    TermSeq kids;
    size_t hash = 0;
    ~TermNode();  // iterative teardown; unary chains can be very deep
};
}  // namespace detail

// Immutable ground term: an atom or a composite sequence (unit = empty
// composite). Composites share structure; copying a Term is O(1).
class Term {
public:
    Term() = default;  // "null" term, used for unbound binding slots
    static Term atom(AtomId id);
    static Term composite(TermSeq kids);
    static Term unit();

    bool is_null() const { return atom_ == kNoAtom && !node_; }
    bool is_atom() const { return atom_ != kNoAtom; }
    bool is_composite() const { return node_ != nullptr; }
    AtomId atom_id() const { return atom_; }
    const TermSeq& kids() const { return node_->kids; }
    size_t size() const { return node_->kids.size(); }
    size_t hash() const;

    bool ptr_equal(const Term& o) const { return atom_ == o.atom_ && node_ == o.node_; }

private:
    friend struct detail::TermNode;
    AtomId atom_ = kNoAtom;
    std::shared_ptr<const detail::TermNode> node_;
};

// Structural equality, iterative (safe on deep unary chains).
bool equal(const Term& a, const Term& b);

// Pattern: term shape with variables. Variables carry a slot index into the
// enclosing definition's (or query's) variable space.
struct Pattern {
    enum class Kind { Atom, Var, Composite };
    Kind kind = Kind::Atom;
    AtomId atom = kNoAtom;
    int32_t slot = -1;  // Kind::Var
    std::vector<Pattern> kids;

    static Pattern make_atom(AtomId id) {
        Pattern p;
        p.kind = Kind::Atom;
        p.atom = id;
        return p;
    }
    static Pattern var(int32_t slot) {
        Pattern p;
        p.kind = Kind::Var;
        p.slot = slot;
        return p;
    }
    static Pattern composite(std::vector<Pattern> kids) {
        Pattern p;
        p.kind = Kind::Composite;
        p.kids = std::move(kids);
        return p;
    }
    bool is_unit() const { return kind == Kind::Composite && kids.empty(); }
};

// Set of variable slots mentioned in a pattern, as a bitmask. Definitions are
// limited to 64 distinct variables (diagnosed at desugar time).
uint64_t pattern_vars(const Pattern& p);

// True when the pattern contains no variables.
bool pattern_is_ground(const Pattern& p);

// Variable bindings for one rule application: slot -> term. Unbound slots are
// null terms.
class Bindings {
public:
    explicit Bindings(size_t nslots = 0) : slots_(nslots) {}
    bool bound(int32_t slot) const { return !slots_[static_cast<size_t>(slot)].is_null(); }
    const Term& get(int32_t slot) const { return slots_[static_cast<size_t>(slot)]; }
    void set(int32_t slot, Term t) { slots_[static_cast<size_t>(slot)] = std::move(t); }
    void clear(int32_t slot) { slots_[static_cast<size_t>(slot)] = Term(); }
    size_t size() const { return slots_.size(); }

private:
    TermSeq slots_;
};

// Unification of a pattern against a ground term. Repeated variables resolve
// by first-binding-then-equality. On failure the bindings may be partially
// extended; callers that retry must snapshot first.
bool unify(const Pattern& p, const Term& t, Bindings& b);

class UnboundVariable : public std::runtime_error {
public:
    explicit UnboundVariable(const std::string& name)
        : std::runtime_error("unbound variable " + name), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

// Substitution; every variable in p must be bound.
Term substitute(const Pattern& p, const Bindings& b, const std::vector<std::string>* var_names = nullptr);

// Opaque or structural context attached to a party; opaque contexts match any
// context and are the only kind the evaluator ever sees.
struct ContextPattern {
    bool opaque = true;
    std::string var_name;          // opaque context variable name
    std::optional<Pattern> shape;  // structural context (concurrent rules only)
};

}  // namespace alethe
