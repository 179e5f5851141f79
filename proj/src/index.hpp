#pragma once

#include <map>
#include <vector>

#include "kernel.hpp"
#include "term.hpp"

namespace alethe {

// Discrimination trie over every program pattern (both sides of each
// computational rule and every halting pattern). Patterns are keyed on their
// token walk: specific atom, composite-open tagged with arity, or a variable
// wildcard that skips one whole sub-term. Contexts are erased; candidates are
// confirmed by full unification afterwards.
class PatternTrie {
public:
    enum class Side { Forward, Backward, Halting };

    struct Hit {
        int def = -1;
        Side side = Side::Halting;
        int party = 0;
    };

    PatternTrie() { nodes_.emplace_back(); }

    void insert(const Pattern& pattern, Hit hit);

    // Entries whose pattern may match t; superset of the true match set for
    // non-linear patterns, exact after unify confirmation.
    void candidates(const Term& t, std::vector<Hit>& out) const;

    size_t leaf_count() const { return leaves_; }
    size_t node_count() const { return nodes_.size(); }

    // Builds the trie for a whole program.
    static PatternTrie build(const Program& p);

private:
    struct Node {
        std::map<AtomId, int> atom_edges;
        std::map<size_t, int> comp_edges;
        int var_edge = -1;
        std::vector<Hit> hits;
    };

    struct Cursor {
        // Stack of (sequence, next index); the current token is the term at
        // the top of the stack.
        std::vector<std::pair<const TermSeq*, size_t>> frames;

        bool at_end() const { return frames.empty(); }
        const Term& current() const { return (*frames.back().first)[frames.back().second]; }
        void pop_exhausted() {
            while (!frames.empty() && frames.back().second == frames.back().first->size()) frames.pop_back();
        }
        void advance_over() {
            ++frames.back().second;
            pop_exhausted();
        }
        void advance_into() {
            const Term& c = current();
            ++frames.back().second;
            if (!c.kids().empty()) frames.emplace_back(&c.kids(), 0);
            else pop_exhausted();
        }
    };

    int child(int node, const Pattern& p, size_t arity_or_atom, int which);
    void explore(int node, Cursor cur, std::vector<Hit>& out) const;

    std::vector<Node> nodes_;
    size_t leaves_ = 0;
};

// One lookup result with its verified bindings.
struct MatchCandidate {
    int def = -1;
    PatternTrie::Side side = PatternTrie::Side::Halting;
    int party = 0;
    Bindings bindings{0};
};

// Exactly the program entries whose pattern unifies with the (ground) term.
std::vector<MatchCandidate> lookup(const Program& p, const PatternTrie& trie, const Term& t);

// Reference oracle: linear scan calling unify on every pattern.
std::vector<MatchCandidate> lookup_linear(const Program& p, const Term& t);

}  // namespace alethe
