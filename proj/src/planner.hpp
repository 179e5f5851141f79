#pragma once

#include <vector>

#include "kernel.hpp"

namespace alethe {

// Knowledge-state transition graph of one rule's sub-rules, explored from the
// input state. Nodes are variable sets (bitmasks over the rule's slots);
// applying a sub-rule consumes its source-side variables and learns its
// target-side variables.
struct TransitionGraph {
    std::vector<uint64_t> nodes;  // discovered knowledge states
    struct Edge {
        int from, to;
        int sub;
        bool backward;
    };
    std::vector<Edge> edges;
    uint64_t input_mask = 0, goal_mask = 0;
    bool truncated = false;  // exploration cap hit
};

// Explores every state reachable from the rule's input variables through
// forward and backward sub-rule applications.
TransitionGraph build_transition_graph(const Definition& d, size_t state_cap = 200000);

// Minimum-total-cost route from input to goal knowledge state; ties broken by
// fewer steps, then lexicographically smaller (sub index, direction) step
// sequence. Each sub-rule is used at most once per direction.
Plan plan_rule(const Definition& d, bool backward);

// Plans every non-concurrent rule in both directions; failures become
// diagnostics and leave the plan marked invalid.
void plan_program(Program& p, std::vector<Diagnostic>& diags);

uint64_t rule_input_vars(const Definition& d);
uint64_t rule_output_vars(const Definition& d);

}  // namespace alethe
