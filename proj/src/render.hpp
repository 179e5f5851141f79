#pragma once

#include <string>

#include "kernel.hpp"

namespace alethe {

struct RenderOptions {
    bool sugar_numerals = true;
    bool sugar_lists = true;
    bool sugar_strings = true;
    bool hide_garbage = true;

    static RenderOptions raw() { return RenderOptions{false, false, false, false}; }
};

// One term, parenthesized when composite (modulo sugar).
std::string render_term(const Term& t, const Program& p, const AtomTable& atoms, const RenderOptions& opts = {});

// A top-level term sequence: children joined by spaces, no outer parentheses.
std::string render_seq(const Term& t, const Program& p, const AtomTable& atoms, const RenderOptions& opts = {});

// Patterns render in core form with their variable names.
std::string render_pattern(const Pattern& p, const std::vector<std::string>& var_names, const AtomTable& atoms);
std::string render_pattern_seq(const Pattern& p, const std::vector<std::string>& var_names, const AtomTable& atoms);

// `:p` listing entry for one definition, including cached plans.
std::string render_definition(const Definition& d, const AtomTable& atoms);

std::string render_plan(const Plan& plan);

}  // namespace alethe
