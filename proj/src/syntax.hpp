#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "span.hpp"

namespace alethe {

// ---------------------------------------------------------------------------
// Tokens

enum class TokKind {
    Word,        // atom / variable / numeral / tilde / hash form
    String,      // "..." with escapes decoded
    HashString,  // #"..." escaped atom name, decoded
    Punct,       // one of ( ) [ ] { } : ;
    Dots,        // run of '.', count in `dots`
    Backtick,    // `
    Pragma,      // -- @ambiguous comment directive
    End,
};

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    int dots = 0;
    Span span;

    bool is_punct(char c) const { return kind == TokKind::Punct && text.size() == 1 && text[0] == c; }
    bool is_word(const char* w) const { return kind == TokKind::Word && text == w; }
};

// Splits source text into tokens. Comments are discarded except for the
// `-- @ambiguous` pragma which becomes a token. Throws SyntaxError on
// unterminated strings or block comments.
std::vector<Token> tokenize(const std::string& source, const std::string& file);

// Unicode helpers used for the variable/atom split (App. of common Ll/Lu
// ranges; unknown codepoints count as neither).
bool codepoint_is_lower(uint32_t cp);
bool codepoint_is_upper(uint32_t cp);
uint32_t first_codepoint(const std::string& utf8);

// ---------------------------------------------------------------------------
// Surface syntax tree

struct SurfaceAtom {
    enum class Kind { Plain, Escaped, Character };
    Kind kind = Kind::Plain;
    std::string name;  // without tildes / # / quote
    int tildes = 0;
};

struct SurfaceTerm {
    enum class Kind { Atom, Var, Composite, Natural, String, List, Blank };
    Kind kind = Kind::Blank;
    SurfaceAtom atom;               // Atom
    std::string var;                // Var
    std::vector<SurfaceTerm> kids;  // Composite; List elements
    bool list_has_tail = false;     // List: last kid is the dotted tail
    uint64_t natural = 0;           // Natural
    std::string text;               // String
    Span span;
};

// A relation as written: `lhs = rhs`, `lhs `infix` rhs`, a bare-symbol infix,
// or a plain term sequence (held in lhs).
struct SurfaceRelation {
    enum class Form { Plain, Eq, Infix };
    Form form = Form::Plain;
    std::vector<SurfaceTerm> lhs, infix, rhs;
};

struct SurfaceParty {
    std::optional<SurfaceTerm> context;  // absent = implicit opaque context
    std::vector<SurfaceTerm> body;
    Span span;
};

struct RuleHead {
    bool is_bag = false;
    SurfaceRelation rel;                        // !is_bag
    std::vector<SurfaceParty> lhs_bag, rhs_bag;  // is_bag
    Span span;
};

struct SurfaceStatement;

struct SurfaceDeclaration {
    enum class Kind { SubRelation, SubParty, Nested };
    Kind kind = Kind::SubRelation;
    SurfaceRelation rel;   // SubRelation
    bool halting = false;  // `!` prefixed sub-relation
    SurfaceParty party;    // SubParty
    int cost = 1;
    std::unique_ptr<SurfaceStatement> nested;
    Span span;
};

struct SurfaceStatement {
    enum class Kind { Rule, HaltingDecl, HaltingRel, Data, Import };
    Kind kind = Kind::Rule;
    RuleHead head;
    std::vector<SurfaceDeclaration> decls;
    std::vector<SurfaceTerm> halting;  // HaltingDecl pattern sequence
    SurfaceRelation halting_rel;       // HaltingRel
    std::vector<SurfaceTerm> data;     // Data pattern sequence
    std::string import_path;           // Import
    bool suppress_ambiguity = false;
    Span span;
};

std::vector<SurfaceStatement> parse_program(const std::string& source, const std::string& file);
std::vector<SurfaceStatement> parse_program(std::vector<Token> tokens);

// Canonical re-rendering of surface trees; parse(render(x)) is structurally
// identical to x.
std::string render_surface(const SurfaceTerm& t);
std::string render_surface(const std::vector<SurfaceStatement>& program);
bool surface_equal(const SurfaceTerm& a, const SurfaceTerm& b);
bool surface_equal(const std::vector<SurfaceStatement>& a, const std::vector<SurfaceStatement>& b);

// ---------------------------------------------------------------------------
// REPL lines

struct ReplCommand {
    enum class Kind { Empty, Quit, Load, Reload, Vars, Rules, Garbage, Evaluate, Relation, Statement };
    Kind kind = Kind::Empty;
    std::vector<std::string> files;         // Load
    std::vector<SurfaceTerm> term;          // Evaluate: | τ*
    bool backward = false;                  // Relation: '<' form
    SurfaceRelation rel;                    // Relation query
    std::shared_ptr<SurfaceStatement> stmt; // Statement to add to the session
};

ReplCommand parse_repl_line(const std::string& line);

}  // namespace alethe
