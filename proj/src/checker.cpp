#include "checker.hpp"

namespace alethe {

bool compatible(const Pattern& p, const Pattern& q) {
    if (p.kind == Pattern::Kind::Var || q.kind == Pattern::Kind::Var) return true;
    if (p.kind == Pattern::Kind::Atom || q.kind == Pattern::Kind::Atom)
        return p.kind == Pattern::Kind::Atom && q.kind == Pattern::Kind::Atom && p.atom == q.atom;
    if (p.kids.size() != q.kids.size()) return false;
    for (size_t i = 0; i < p.kids.size(); ++i)
        if (!compatible(p.kids[i], q.kids[i])) return false;
    return true;
}

AmbiguityGraph build_ambiguity_graph(const Program& p) {
    AmbiguityGraph g;
    for (size_t i = 0; i < p.defs.size(); ++i) {
        const Definition& d = p.defs[i];
        int di = static_cast<int>(i);
        if (d.kind == Definition::Kind::Halting) {
            g.nodes.push_back(AmbiguityGraph::Node{&d.halting, false, di, PatternTrie::Side::Halting, 0, d.span});
        } else {
            for (size_t k = 0; k < d.lhs.size(); ++k)
                g.nodes.push_back(AmbiguityGraph::Node{&d.lhs[k].body, true, di, PatternTrie::Side::Forward,
                                                       static_cast<int>(k), d.span});
            for (size_t k = 0; k < d.rhs.size(); ++k)
                g.nodes.push_back(AmbiguityGraph::Node{&d.rhs[k].body, true, di, PatternTrie::Side::Backward,
                                                       static_cast<int>(k), d.span});
        }
    }
    size_t n = g.nodes.size();
    size_t words = (n + 63) / 64;
    g.adj.assign(n, std::vector<uint64_t>(words, 0));
    for (size_t a = 0; a < n; ++a)
        for (size_t b = a + 1; b < n; ++b)
            if (compatible(*g.nodes[a].pattern, *g.nodes[b].pattern)) {
                g.adj[a][b >> 6] |= 1ULL << (b & 63);
                g.adj[b][a >> 6] |= 1ULL << (a & 63);
            }
    return g;
}

AmbiguityReport find_ambiguities(const Program& p) {
    AmbiguityReport rep;
    rep.graph = build_ambiguity_graph(p);
    const AmbiguityGraph& g = rep.graph;
    size_t n = g.nodes.size();
    size_t words = (n + 63) / 64;
    // Enumerate triangles a<b<c via row intersections; report those with at
    // least two white nodes.
    for (size_t a = 0; a < n; ++a) {
        for (size_t b = a + 1; b < n; ++b) {
            if (!g.edge(a, b)) continue;
            for (size_t w = 0; w < words; ++w) {
                uint64_t both = g.adj[a][w] & g.adj[b][w];
                // only c > b
                if (w == (b >> 6)) {
                    uint64_t keep = ~((b & 63) == 63 ? ~0ULL : ((1ULL << ((b & 63) + 1)) - 1));
                    both &= keep;
                } else if (w < (b >> 6)) {
                    both = 0;
                }
                while (both) {
                    size_t c = (w << 6) + static_cast<size_t>(__builtin_ctzll(both));
                    both &= both - 1;
                    int whites = (g.nodes[a].white ? 1 : 0) + (g.nodes[b].white ? 1 : 0) + (g.nodes[c].white ? 1 : 0);
                    if (whites < 2) continue;
                    bool suppressed = p.defs[static_cast<size_t>(g.nodes[a].def)].suppress_ambiguity ||
                                      p.defs[static_cast<size_t>(g.nodes[b].def)].suppress_ambiguity ||
                                      p.defs[static_cast<size_t>(g.nodes[c].def)].suppress_ambiguity;
                    if (suppressed) {
                        ++rep.suppressed;
                        continue;
                    }
                    rep.triangles.push_back(Triangle{static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
                }
            }
        }
    }
    return rep;
}

}  // namespace alethe
