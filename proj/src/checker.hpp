#pragma once

#include <vector>

#include "index.hpp"
#include "kernel.hpp"

namespace alethe {

// True iff a ground term exists satisfying both patterns, decided by the
// inductive rule: a variable matches anything; atoms must be identical;
// composites must have equal length and pairwise-compatible children.
// Repeated variables are ignored (conservative).
bool compatible(const Pattern& p, const Pattern& q);

struct AmbiguityGraph {
    struct Node {
        const Pattern* pattern;
        bool white;  // computational rule side; black = halting pattern
        int def;
        PatternTrie::Side side;
        int party;
        Span span;
    };
    std::vector<Node> nodes;
    // Adjacency as bitset rows, nodes.size() x words.
    std::vector<std::vector<uint64_t>> adj;

    bool edge(size_t a, size_t b) const { return (adj[a][b >> 6] >> (b & 63)) & 1; }
};

struct Triangle {
    int a, b, c;  // node indices, a < b < c
};

struct AmbiguityReport {
    AmbiguityGraph graph;
    std::vector<Triangle> triangles;  // with >= 2 white nodes, after suppression
    int suppressed = 0;

    bool ambiguous() const { return !triangles.empty(); }
};

AmbiguityGraph build_ambiguity_graph(const Program& p);
AmbiguityReport find_ambiguities(const Program& p);

}  // namespace alethe
