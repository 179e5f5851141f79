#include "planner.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

namespace alethe {

uint64_t rule_input_vars(const Definition& d) {
    uint64_t m = 0;
    for (const auto& p : d.lhs) m |= pattern_vars(p.body);
    return m;
}

uint64_t rule_output_vars(const Definition& d) {
    uint64_t m = 0;
    for (const auto& p : d.rhs) m |= pattern_vars(p.body);
    return m;
}

TransitionGraph build_transition_graph(const Definition& d, size_t state_cap) {
    TransitionGraph g;
    g.input_mask = rule_input_vars(d);
    g.goal_mask = rule_output_vars(d);

    std::vector<std::pair<uint64_t, uint64_t>> sub_vars;  // (lhs, rhs) variable masks
    sub_vars.reserve(d.subs.size());
    for (const auto& s : d.subs) sub_vars.emplace_back(pattern_vars(s.lhs), pattern_vars(s.rhs));

    std::map<uint64_t, int> ids;
    auto intern = [&](uint64_t m) {
        auto it = ids.find(m);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(g.nodes.size());
        ids.emplace(m, id);
        g.nodes.push_back(m);
        return id;
    };
    std::vector<uint64_t> frontier{g.input_mask};
    intern(g.input_mask);
    while (!frontier.empty()) {
        uint64_t cur = frontier.back();
        frontier.pop_back();
        int from = ids[cur];
        for (size_t i = 0; i < sub_vars.size(); ++i) {
            auto [lv, rv] = sub_vars[i];
            if ((cur & lv) == lv) {
                uint64_t to = (cur & ~lv) | rv;
                if (to != cur) {
                    bool fresh = !ids.count(to);
                    if (fresh && g.nodes.size() >= state_cap) {
                        g.truncated = true;
                        continue;
                    }
                    int ti = intern(to);
                    g.edges.push_back(TransitionGraph::Edge{from, ti, static_cast<int>(i), false});
                    if (fresh) frontier.push_back(to);
                }
            }
            if ((cur & rv) == rv) {
                uint64_t to = (cur & ~rv) | lv;
                if (to != cur) {
                    bool fresh = !ids.count(to);
                    if (fresh && g.nodes.size() >= state_cap) {
                        g.truncated = true;
                        continue;
                    }
                    int ti = intern(to);
                    g.edges.push_back(TransitionGraph::Edge{from, ti, static_cast<int>(i), true});
                    if (fresh) frontier.push_back(to);
                }
            }
        }
    }
    return g;
}

namespace {

struct SearchEntry {
    int cost;
    uint64_t state;
    uint64_t used;  // bit 2i = sub i forward used, 2i+1 = backward used
    std::vector<PlanStep> steps;

    // Priority: lower cost first, then fewer steps, then lexicographically
    // smaller step sequence; fully deterministic.
    bool operator>(const SearchEntry& o) const {
        if (cost != o.cost) return cost > o.cost;
        if (steps.size() != o.steps.size()) return steps.size() > o.steps.size();
        return steps > o.steps;
    }
};

std::string name_vars(const Definition& d, uint64_t mask) {
    std::string out;
    for (int i = 0; i < 64; ++i)
        if (mask & (1ULL << i)) {
            if (!out.empty()) out += ", ";
            out += static_cast<size_t>(i) < d.var_names.size() ? d.var_names[static_cast<size_t>(i)]
                                                               : ("#" + std::to_string(i));
        }
    return out;
}

}  // namespace

Plan plan_rule(const Definition& d, bool backward) {
    Plan plan;
    uint64_t input = backward ? rule_output_vars(d) : rule_input_vars(d);
    uint64_t goal = backward ? rule_input_vars(d) : rule_output_vars(d);

    if (d.subs.size() > 31) {
        plan.error = "too many sub-rules to serialise (limit 31)";
        return plan;
    }
    std::vector<std::pair<uint64_t, uint64_t>> sub_vars;
    for (const auto& s : d.subs) sub_vars.emplace_back(pattern_vars(s.lhs), pattern_vars(s.rhs));

    std::priority_queue<SearchEntry, std::vector<SearchEntry>, std::greater<SearchEntry>> pq;
    pq.push(SearchEntry{0, input, 0, {}});
    std::set<std::pair<uint64_t, uint64_t>> settled;
    uint64_t reached_union = input;

    while (!pq.empty()) {
        SearchEntry e = pq.top();
        pq.pop();
        if (!settled.emplace(e.state, e.used).second) continue;
        reached_union |= e.state;
        if ((e.state & goal) == goal) {
            plan.valid = true;
            plan.steps = std::move(e.steps);
            plan.total_cost = e.cost;
            std::set<int> used_subs;
            for (const auto& s : plan.steps) used_subs.insert(s.sub);
            for (int i = 0; i < static_cast<int>(d.subs.size()); ++i)
                if (!used_subs.count(i)) plan.unused_subs.push_back(i);
            return plan;
        }
        for (size_t i = 0; i < sub_vars.size(); ++i) {
            auto [lv, rv] = sub_vars[i];
            for (int dir = 0; dir < 2; ++dir) {
                uint64_t used_bit = 1ULL << (2 * i + static_cast<size_t>(dir));
                if (e.used & used_bit) continue;
                uint64_t need = dir ? rv : lv;
                uint64_t gain = dir ? lv : rv;
                if ((e.state & need) != need) continue;
                uint64_t to = (e.state & ~need) | gain;
                if (to == e.state) continue;
                SearchEntry n;
                n.cost = e.cost + d.subs[i].cost;
                n.state = to;
                n.used = e.used | used_bit;
                n.steps = e.steps;
                n.steps.push_back(PlanStep{static_cast<int>(i), dir == 1});
                if (!settled.count({n.state, n.used})) pq.push(std::move(n));
            }
        }
    }
    uint64_t missing = goal & ~reached_union;
    plan.error = "cannot serialise rule: no route to output variables";
    if (missing) plan.error += "; unreachable: " + name_vars(d, missing);
    return plan;
}

void plan_program(Program& p, std::vector<Diagnostic>& diags) {
    for (auto& d : p.defs) {
        if (d.kind != Definition::Kind::Rule || d.concurrent) continue;
        d.fwd_plan = plan_rule(d, false);
        d.bwd_plan = plan_rule(d, true);
        if (!d.fwd_plan.valid)
            diags.push_back(Diagnostic{Severity::Error, d.span, d.fwd_plan.error + " (forward)"});
        if (!d.bwd_plan.valid)
            diags.push_back(Diagnostic{Severity::Error, d.span, d.bwd_plan.error + " (backward)"});
    }
}

}  // namespace alethe
