#include "index.hpp"

namespace alethe {

void PatternTrie::insert(const Pattern& pattern, Hit hit) {
    // Iterative DFS over the pattern's token walk.
    int node = 0;
    std::vector<const Pattern*> work{&pattern};
    while (!work.empty()) {
        const Pattern* p = work.back();
        work.pop_back();
        Node& n = nodes_[static_cast<size_t>(node)];
        int next;
        switch (p->kind) {
            case Pattern::Kind::Atom: {
                auto it = n.atom_edges.find(p->atom);
                if (it == n.atom_edges.end()) {
                    next = static_cast<int>(nodes_.size());
                    nodes_[static_cast<size_t>(node)].atom_edges.emplace(p->atom, next);
                    nodes_.emplace_back();
                } else {
                    next = it->second;
                }
                break;
            }
            case Pattern::Kind::Var: {
                if (n.var_edge < 0) {
                    next = static_cast<int>(nodes_.size());
                    nodes_[static_cast<size_t>(node)].var_edge = next;
                    nodes_.emplace_back();
                } else {
                    next = n.var_edge;
                }
                break;
            }
            case Pattern::Kind::Composite: {
                size_t arity = p->kids.size();
                auto it = n.comp_edges.find(arity);
                if (it == n.comp_edges.end()) {
                    next = static_cast<int>(nodes_.size());
                    nodes_[static_cast<size_t>(node)].comp_edges.emplace(arity, next);
                    nodes_.emplace_back();
                } else {
                    next = it->second;
                }
                for (size_t i = p->kids.size(); i-- > 0;) work.push_back(&p->kids[i]);
                break;
            }
            default: throw InternalError("bad pattern kind");
        }
        node = next;
    }
    nodes_[static_cast<size_t>(node)].hits.push_back(hit);
    ++leaves_;
}

void PatternTrie::explore(int node, Cursor cur, std::vector<Hit>& out) const {
    const Node& n = nodes_[static_cast<size_t>(node)];
    if (cur.at_end()) {
        out.insert(out.end(), n.hits.begin(), n.hits.end());
        return;
    }
    const Term& c = cur.current();
    if (n.var_edge >= 0) {
        Cursor skip = cur;
        skip.advance_over();
        explore(n.var_edge, std::move(skip), out);
    }
    if (c.is_atom()) {
        auto it = n.atom_edges.find(c.atom_id());
        if (it != n.atom_edges.end()) {
            cur.advance_over();
            explore(it->second, std::move(cur), out);
        }
    } else {
        auto it = n.comp_edges.find(c.size());
        if (it != n.comp_edges.end()) {
            cur.advance_into();
            explore(it->second, std::move(cur), out);
        }
    }
}

void PatternTrie::candidates(const Term& t, std::vector<Hit>& out) const {
    TermSeq root{t};
    Cursor cur;
    cur.frames.emplace_back(&root, 0);
    explore(0, std::move(cur), out);
}

PatternTrie PatternTrie::build(const Program& p) {
    PatternTrie trie;
    for (size_t i = 0; i < p.defs.size(); ++i) {
        const Definition& d = p.defs[i];
        int di = static_cast<int>(i);
        if (d.kind == Definition::Kind::Halting) {
            trie.insert(d.halting, Hit{di, Side::Halting, 0});
        } else {
            for (size_t k = 0; k < d.lhs.size(); ++k)
                trie.insert(d.lhs[k].body, Hit{di, Side::Forward, static_cast<int>(k)});
            for (size_t k = 0; k < d.rhs.size(); ++k)
                trie.insert(d.rhs[k].body, Hit{di, Side::Backward, static_cast<int>(k)});
        }
    }
    return trie;
}

namespace {

const Pattern& hit_pattern(const Program& p, const PatternTrie::Hit& h) {
    const Definition& d = p.defs[static_cast<size_t>(h.def)];
    switch (h.side) {
        case PatternTrie::Side::Halting: return d.halting;
        case PatternTrie::Side::Forward: return d.lhs[static_cast<size_t>(h.party)].body;
        case PatternTrie::Side::Backward: return d.rhs[static_cast<size_t>(h.party)].body;
    }
    throw InternalError("bad side");
}

}  // namespace

std::vector<MatchCandidate> lookup(const Program& p, const PatternTrie& trie, const Term& t) {
    std::vector<PatternTrie::Hit> hits;
    trie.candidates(t, hits);
    std::vector<MatchCandidate> out;
    for (const auto& h : hits) {
        const Definition& d = p.defs[static_cast<size_t>(h.def)];
        Bindings b(static_cast<size_t>(d.num_vars));
        if (unify(hit_pattern(p, h), t, b)) out.push_back(MatchCandidate{h.def, h.side, h.party, std::move(b)});
    }
    return out;
}

std::vector<MatchCandidate> lookup_linear(const Program& p, const Term& t) {
    std::vector<MatchCandidate> out;
    for (size_t i = 0; i < p.defs.size(); ++i) {
        const Definition& d = p.defs[i];
        int di = static_cast<int>(i);
        if (d.kind == Definition::Kind::Halting) {
            Bindings b(static_cast<size_t>(d.num_vars));
            if (unify(d.halting, t, b))
                out.push_back(MatchCandidate{di, PatternTrie::Side::Halting, 0, std::move(b)});
        } else {
            for (size_t k = 0; k < d.lhs.size(); ++k) {
                Bindings b(static_cast<size_t>(d.num_vars));
                if (unify(d.lhs[k].body, t, b))
                    out.push_back(
                        MatchCandidate{di, PatternTrie::Side::Forward, static_cast<int>(k), std::move(b)});
            }
            for (size_t k = 0; k < d.rhs.size(); ++k) {
                Bindings b(static_cast<size_t>(d.num_vars));
                if (unify(d.rhs[k].body, t, b))
                    out.push_back(
                        MatchCandidate{di, PatternTrie::Side::Backward, static_cast<int>(k), std::move(b)});
            }
        }
    }
    return out;
}

}  // namespace alethe
