#include "term.hpp"

namespace alethe {

AtomId AtomTable::global(const std::string& name) {
    auto it = globals_.find(name);
    if (it != globals_.end()) return it->second;
    AtomId id = static_cast<AtomId>(atoms_.size());
    atoms_.push_back(AtomInfo{name, false, 0});
    globals_.emplace(name, id);
    return id;
}

AtomId AtomTable::scoped(uint32_t scope_id, const std::string& name) {
    std::string key = std::to_string(scope_id) + "\x1f" + name;
    auto it = scoped_by_key_.find(key);
    if (it != scoped_by_key_.end()) return it->second;
    AtomId id = static_cast<AtomId>(atoms_.size());
    atoms_.push_back(AtomInfo{name, true, scope_id});
    scoped_by_key_.emplace(std::move(key), id);
    return id;
}

std::optional<AtomId> AtomTable::find_global(const std::string& name) const {
    auto it = globals_.find(name);
    if (it == globals_.end()) return std::nullopt;
    return it->second;
}

namespace detail {

TermNode::~TermNode() {
    // Unary numerals produce chains tens of thousands of nodes deep; naive
    // recursive teardown overflows the stack. Drain uniquely-owned descendants
    // into an explicit worklist so each node dies with empty kids.
    if (kids.empty()) return;
    TermSeq work = std::move(kids);
    while (!work.empty()) {
        Term t = std::move(work.back());
        work.pop_back();
        if (t.node_ && t.node_.use_count() == 1) {
            auto* mut = const_cast<TermNode*>(t.node_.get());
            for (Term& k : mut->kids) work.push_back(std::move(k));
            mut->kids.clear();
        }
    }
}

}  // namespace detail

size_t Term::hash() const {
    if (is_atom()) return 0x9e3779b97f4a7c15ULL ^ static_cast<size_t>(atom_);
    if (node_) return node_->hash;
    return 0;
}

Term Term::atom(AtomId id) {
    Term t;
    t.atom_ = id;
    return t;
}

Term Term::composite(TermSeq kids) {
    auto node = std::make_shared<detail::TermNode>();
    size_t h = 0xcbf29ce484222325ULL;
    for (const Term& k : kids) {
        h ^= k.hash();
        h *= 0x100000001b3ULL;
    }
    node->kids = std::move(kids);
    node->hash = h;
    Term t;
    t.node_ = std::move(node);
    return t;
}

Term Term::unit() {
    static const Term u = Term::composite({});
    return u;
}

bool equal(const Term& a, const Term& b) {
    if (a.ptr_equal(b)) return true;
    if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
    if (a.is_atom() || b.is_atom()) return a.is_atom() && b.is_atom() && a.atom_id() == b.atom_id();
    if (a.hash() != b.hash() || a.size() != b.size()) return false;
    // Iterative pairwise walk; deep chains are the norm with unary numerals.
    std::vector<std::pair<const Term*, const Term*>> work;
    work.emplace_back(&a, &b);
    while (!work.empty()) {
        auto [x, y] = work.back();
        work.pop_back();
        if (x->ptr_equal(*y)) continue;
        if (x->is_atom() != y->is_atom()) return false;
        if (x->is_atom()) {
            if (x->atom_id() != y->atom_id()) return false;
            continue;
        }
        if (x->hash() != y->hash() || x->size() != y->size()) return false;
        for (size_t i = 0; i < x->size(); ++i) work.emplace_back(&x->kids()[i], &y->kids()[i]);
    }
    return true;
}

uint64_t pattern_vars(const Pattern& p) {
    switch (p.kind) {
        case Pattern::Kind::Atom: return 0;
        case Pattern::Kind::Var: return p.slot >= 0 && p.slot < 64 ? (1ULL << p.slot) : 0;
        case Pattern::Kind::Composite: {
            uint64_t m = 0;
            for (const Pattern& k : p.kids) m |= pattern_vars(k);
            return m;
        }
    }
    return 0;
}

bool pattern_is_ground(const Pattern& p) {
    if (p.kind == Pattern::Kind::Var) return false;
    if (p.kind == Pattern::Kind::Composite)
        for (const Pattern& k : p.kids)
            if (!pattern_is_ground(k)) return false;
    return true;
}

bool unify(const Pattern& p, const Term& t, Bindings& b) {
    switch (p.kind) {
        case Pattern::Kind::Atom: return t.is_atom() && t.atom_id() == p.atom;
        case Pattern::Kind::Var:
            if (b.bound(p.slot)) return equal(b.get(p.slot), t);
            b.set(p.slot, t);
            return true;
        case Pattern::Kind::Composite: {
            if (!t.is_composite() || t.size() != p.kids.size()) return false;
            for (size_t i = 0; i < p.kids.size(); ++i)
                if (!unify(p.kids[i], t.kids()[i], b)) return false;
            return true;
        }
    }
    return false;
}

Term substitute(const Pattern& p, const Bindings& b, const std::vector<std::string>* var_names) {
    switch (p.kind) {
        case Pattern::Kind::Atom: return Term::atom(p.atom);
        case Pattern::Kind::Var: {
            if (!b.bound(p.slot)) {
                std::string name = var_names && p.slot >= 0 && static_cast<size_t>(p.slot) < var_names->size()
                                       ? (*var_names)[static_cast<size_t>(p.slot)]
                                       : ("#" + std::to_string(p.slot));
                throw UnboundVariable(name);
            }
            return b.get(p.slot);
        }
        case Pattern::Kind::Composite: {
            TermSeq kids;
            kids.reserve(p.kids.size());
            for (const Pattern& k : p.kids) kids.push_back(substitute(k, b, var_names));
            return Term::composite(kids);
        }
    }
    return Term();
}

}  // namespace alethe
