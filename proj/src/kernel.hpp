#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "syntax.hpp"
#include "term.hpp"

namespace alethe {

struct SubRule {
    Pattern lhs, rhs;  // composite patterns over the whole sequence
    int cost = 1;
    Span span;
};

struct Party {
    ContextPattern ctx;
    Pattern body;  // composite pattern over the party's term sequence
};

struct PlanStep {
    int sub = 0;
    bool backward = false;
    bool operator==(const PlanStep& o) const { return sub == o.sub && backward == o.backward; }
    bool operator<(const PlanStep& o) const { return sub != o.sub ? sub < o.sub : backward < o.backward; }
};

struct Plan {
    bool valid = false;
    std::vector<PlanStep> steps;
    int total_cost = 0;
    std::vector<int> unused_subs;
    std::string error;  // set when !valid
};

struct Definition {
    enum class Kind { Halting, Rule };
    Kind kind = Kind::Halting;

    Pattern halting;  // Kind::Halting

    std::vector<Party> lhs, rhs;  // Kind::Rule
    std::vector<SubRule> subs;
    bool concurrent = false;
    bool suppress_ambiguity = false;

    int num_vars = 0;
    std::vector<std::string> var_names;

    Span span;
    Plan fwd_plan, bwd_plan;

    // Relation-form accessors; valid when !concurrent.
    const Pattern& lhs_pattern() const { return lhs.front().body; }
    const Pattern& rhs_pattern() const { return rhs.front().body; }
};

class PatternTrie;

struct Program {
    std::vector<Definition> defs;
    std::vector<Diagnostic> warnings;
    std::vector<std::string> files;  // load order, resolved paths

    // Atoms the renderer and engine treat specially; kNoAtom when the name
    // was never interned.
    AtomId atom_S = kNoAtom, atom_Z = kNoAtom, atom_Cons = kNoAtom, atom_Nil = kNoAtom;
    AtomId atom_Garbage = kNoAtom, atom_Dup = kNoAtom;
    // Heads of data declarations; Dup on these shapes may be short-circuited.
    std::set<AtomId> dup_covered;

    std::shared_ptr<PatternTrie> index;
};

// Desugars one surface statement into zero or more core definitions appended
// to `program`. `scopes` is the enclosing rule-scope stack (innermost last);
// top-level statements pass an empty stack.
class Desugarer {
public:
    Desugarer(AtomTable& atoms, Program& program) : atoms_(atoms), prog_(program) {}

    void statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes);

    // Desugars a value term in a fresh variable-free context (queries, tests).
    Term ground_value(const SurfaceTerm& t);

private:
    friend class QueryCompiler;

    struct VarSpace {
        std::map<std::string, int32_t> slots;
        std::vector<std::string> names;
        int32_t intern(const std::string& name, const Span& sp);
        int32_t fresh(const std::string& hint);
    };

    Pattern value(const SurfaceTerm& t, VarSpace* vars, std::vector<uint32_t>& scopes);
    Pattern seq_pattern(const std::vector<SurfaceTerm>& ts, VarSpace* vars, std::vector<uint32_t>& scopes);
    AtomId atom(const SurfaceAtom& a, const Span& sp, std::vector<uint32_t>& scopes);

    // Builds the two desugared sides of a relation: `f x̄ () = () ȳ f` for
    // infix forms, literal sides for '=' forms.
    void relation_sides(const SurfaceRelation& rel, VarSpace* vars, std::vector<uint32_t>& scopes, Pattern& lhs,
                        Pattern& rhs, const Span& sp);

    void rule_statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes);
    void data_statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes);
    void halting_statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes);

    void emit_halting(Pattern p, const Span& sp);
    void emit_generalized_halting(const Pattern& p, const Span& sp);
    // `! f` for composite infix terms: the composite's children become the
    // halting sequence, variables generalized.
    void emit_infix_term_halting(const Pattern& infix, const Span& sp);

    void emit(Definition def);
    std::string canonical_key(const Definition& d) const;

    AtomTable& atoms_;
    Program& prog_;
    std::set<std::string> seen_;
};

// Loads a program from entry files, resolving the transitive import closure
// (cycles permitted, each file once). Throws SyntaxError on unreadable or
// unparsable files. Checking, planning and indexing are the caller's job.
Program load_program(const std::vector<std::string>& entry_paths, const std::vector<std::string>& search_paths,
                     AtomTable& atoms, const std::vector<std::shared_ptr<SurfaceStatement>>& extra_statements = {});

// Resolves the atoms the renderer treats specially.
void resolve_special_atoms(Program& p, AtomTable& atoms);

}  // namespace alethe
