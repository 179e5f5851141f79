#include "kernel.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace alethe {

namespace fs = std::filesystem;

int32_t Desugarer::VarSpace::intern(const std::string& name, const Span& sp) {
    auto it = slots.find(name);
    if (it != slots.end()) return it->second;
    if (names.size() >= 64) throw SyntaxError(sp, "too many variables in one definition (limit 64)");
    int32_t slot = static_cast<int32_t>(names.size());
    slots.emplace(name, slot);
    names.push_back(name);
    return slot;
}

int32_t Desugarer::VarSpace::fresh(const std::string& hint) {
    std::string name = hint;
    int n = 0;
    while (slots.count(name)) name = hint + std::to_string(++n);
    if (names.size() >= 64) throw SyntaxError(Span{}, "too many variables in one definition (limit 64)");
    int32_t slot = static_cast<int32_t>(names.size());
    slots.emplace(name, slot);
    names.push_back(name);
    return slot;
}

AtomId Desugarer::atom(const SurfaceAtom& a, const Span& sp, std::vector<uint32_t>& scopes) {
    switch (a.kind) {
        case SurfaceAtom::Kind::Character: return atoms_.global("'" + a.name);
        case SurfaceAtom::Kind::Escaped: return atoms_.global(a.name);
        case SurfaceAtom::Kind::Plain:
            if (a.tildes == 0) return atoms_.global(a.name);
            if (static_cast<size_t>(a.tildes) > scopes.size())
                throw SyntaxError(sp, "tilde depth " + std::to_string(a.tildes) + " exceeds scope nesting depth " +
                                          std::to_string(scopes.size()));
            return atoms_.scoped(scopes[scopes.size() - static_cast<size_t>(a.tildes)], a.name);
    }
    throw InternalError("unreachable atom kind");
}

Pattern Desugarer::value(const SurfaceTerm& t, VarSpace* vars, std::vector<uint32_t>& scopes) {
    switch (t.kind) {
        case SurfaceTerm::Kind::Atom: return Pattern::make_atom(atom(t.atom, t.span, scopes));
        case SurfaceTerm::Kind::Var:
            if (!vars) throw SyntaxError(t.span, "variable '" + t.var + "' in a ground term");
            return Pattern::var(vars->intern(t.var, t.span));
        case SurfaceTerm::Kind::Composite: {
            std::vector<Pattern> kids;
            kids.reserve(t.kids.size());
            for (const auto& k : t.kids) kids.push_back(value(k, vars, scopes));
            return Pattern::composite(std::move(kids));
        }
        case SurfaceTerm::Kind::Natural: {
            AtomId s = atoms_.global("S"), z = atoms_.global("Z");
            Pattern acc = Pattern::make_atom(z);
            for (uint64_t i = 0; i < t.natural; ++i)
                acc = Pattern::composite({Pattern::make_atom(s), std::move(acc)});
            return acc;
        }
        case SurfaceTerm::Kind::String: {
            AtomId cons = atoms_.global("Cons"), nil = atoms_.global("Nil");
            // Split into UTF-8 codepoints, build the spine back to front.
            std::vector<std::string> chars;
            for (size_t i = 0; i < t.text.size();) {
                size_t len = 1;
                unsigned char c = static_cast<unsigned char>(t.text[i]);
                if ((c & 0xe0) == 0xc0) len = 2;
                else if ((c & 0xf0) == 0xe0) len = 3;
                else if ((c & 0xf8) == 0xf0) len = 4;
                chars.push_back(t.text.substr(i, len));
                i += len;
            }
            Pattern acc = Pattern::make_atom(nil);
            for (size_t i = chars.size(); i-- > 0;) {
                Pattern ch = Pattern::make_atom(atoms_.global("'" + chars[i]));
                acc = Pattern::composite({Pattern::make_atom(cons), std::move(ch), std::move(acc)});
            }
            return acc;
        }
        case SurfaceTerm::Kind::List: {
            AtomId cons = atoms_.global("Cons"), nil = atoms_.global("Nil");
            size_t n = t.kids.size();
            Pattern acc;
            size_t first_spine;
            if (t.list_has_tail) {
                acc = value(t.kids[n - 1], vars, scopes);
                first_spine = n - 1;
            } else {
                acc = Pattern::make_atom(nil);
                first_spine = n;
            }
            for (size_t i = first_spine; i-- > 0;) {
                Pattern el = value(t.kids[i], vars, scopes);
                acc = Pattern::composite({Pattern::make_atom(cons), std::move(el), std::move(acc)});
            }
            return acc;
        }
        case SurfaceTerm::Kind::Blank: return Pattern::composite({});
    }
    throw InternalError("unreachable surface term kind");
}

Pattern Desugarer::seq_pattern(const std::vector<SurfaceTerm>& ts, VarSpace* vars, std::vector<uint32_t>& scopes) {
    std::vector<Pattern> kids;
    kids.reserve(ts.size());
    for (const auto& t : ts) kids.push_back(value(t, vars, scopes));
    return Pattern::composite(std::move(kids));
}

Term Desugarer::ground_value(const SurfaceTerm& t) {
    std::vector<uint32_t> no_scopes;
    Pattern p = value(t, nullptr, no_scopes);
    Bindings none(0);
    return substitute(p, none);
}

void Desugarer::relation_sides(const SurfaceRelation& rel, VarSpace* vars, std::vector<uint32_t>& scopes,
                               Pattern& lhs, Pattern& rhs, const Span& sp) {
    if (rel.form == SurfaceRelation::Form::Eq) {
        lhs = seq_pattern(rel.lhs, vars, scopes);
        rhs = seq_pattern(rel.rhs, vars, scopes);
        return;
    }
    if (rel.form != SurfaceRelation::Form::Infix) throw SyntaxError(sp, "expected a relation");
    Pattern f;
    if (rel.infix.size() == 1) {
        f = value(rel.infix[0], vars, scopes);
    } else {
        std::vector<Pattern> kids;
        for (const auto& t : rel.infix) kids.push_back(value(t, vars, scopes));
        f = Pattern::composite(std::move(kids));
    }
    std::vector<Pattern> l, r;
    l.push_back(f);
    for (const auto& t : rel.lhs) l.push_back(value(t, vars, scopes));
    l.push_back(Pattern::composite({}));
    r.push_back(Pattern::composite({}));
    for (const auto& t : rel.rhs) r.push_back(value(t, vars, scopes));
    r.push_back(std::move(f));
    lhs = Pattern::composite(std::move(l));
    rhs = Pattern::composite(std::move(r));
}

namespace {

// Copies a pattern replacing every variable with a fresh one; used for the
// implied halting patterns of infix rules.
Pattern generalize(const Pattern& p, Desugarer::VarSpace& fresh_space);

Pattern generalize(const Pattern& p, Desugarer::VarSpace& space) {
    switch (p.kind) {
        case Pattern::Kind::Atom: return p;
        case Pattern::Kind::Var: return Pattern::var(space.fresh("_"));
        case Pattern::Kind::Composite: {
            std::vector<Pattern> kids;
            kids.reserve(p.kids.size());
            for (const auto& k : p.kids) kids.push_back(generalize(k, space));
            return Pattern::composite(std::move(kids));
        }
    }
    return p;
}

void canonical_pattern_key(const Pattern& p, std::map<int32_t, int>& renames, std::string& out) {
    switch (p.kind) {
        case Pattern::Kind::Atom:
            out += 'a';
            out += std::to_string(p.atom);
            out += ',';
            break;
        case Pattern::Kind::Var: {
            auto it = renames.find(p.slot);
            int idx;
            if (it == renames.end()) {
                idx = static_cast<int>(renames.size());
                renames.emplace(p.slot, idx);
            } else {
                idx = it->second;
            }
            out += 'v';
            out += std::to_string(idx);
            out += ',';
            break;
        }
        case Pattern::Kind::Composite:
            out += '(';
            for (const auto& k : p.kids) canonical_pattern_key(k, renames, out);
            out += ')';
            break;
    }
}

}  // namespace

std::string Desugarer::canonical_key(const Definition& d) const {
    std::string out;
    std::map<int32_t, int> renames;
    if (d.kind == Definition::Kind::Halting) {
        out += "H";
        canonical_pattern_key(d.halting, renames, out);
        return out;
    }
    out += "R";
    for (const auto& p : d.lhs) {
        out += p.ctx.opaque ? "o" : "s";
        canonical_pattern_key(p.body, renames, out);
    }
    out += "=";
    for (const auto& p : d.rhs) {
        out += p.ctx.opaque ? "o" : "s";
        canonical_pattern_key(p.body, renames, out);
    }
    out += ":";
    for (const auto& s : d.subs) {
        canonical_pattern_key(s.lhs, renames, out);
        out += "~";
        canonical_pattern_key(s.rhs, renames, out);
        out += std::to_string(s.cost);
        out += ";";
    }
    return out;
}

void Desugarer::emit(Definition def) {
    std::string key = canonical_key(def);
    auto [it, inserted] = seen_.emplace(std::move(key));
    (void)it;
    if (!inserted) {
        if (def.kind == Definition::Kind::Rule)
            prog_.warnings.push_back(
                Diagnostic{Severity::Warning, def.span, "duplicate definition ignored"});
        return;
    }
    prog_.defs.push_back(std::move(def));
}

void Desugarer::emit_halting(Pattern p, const Span& sp) {
    Definition d;
    d.kind = Definition::Kind::Halting;
    d.halting = std::move(p);
    d.span = sp;
    // Variable names for halting patterns are positional; keep a generic list
    // long enough for rendering.
    uint64_t mask = pattern_vars(d.halting);
    int hi = 0;
    for (int i = 0; i < 64; ++i)
        if (mask & (1ULL << i)) hi = i + 1;
    d.num_vars = hi;
    for (int i = 0; i < hi; ++i) d.var_names.push_back("v" + std::to_string(i));
    emit(std::move(d));
}

void Desugarer::emit_generalized_halting(const Pattern& p, const Span& sp) {
    VarSpace space;
    emit_halting(generalize(p, space), sp);
}

void Desugarer::emit_infix_term_halting(const Pattern& infix, const Span& sp) {
    if (infix.kind != Pattern::Kind::Composite || infix.kids.empty()) return;
    VarSpace space;
    emit_halting(generalize(infix, space), sp);
}

void Desugarer::halting_statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes) {
    if (s.kind == SurfaceStatement::Kind::HaltingDecl) {
        VarSpace space;
        emit_halting(seq_pattern(s.halting, &space, scopes), s.span);
        return;
    }
    // `! ρ;` — both sides beget halting patterns, as does a composite infix.
    VarSpace space;
    Pattern lhs, rhs;
    relation_sides(s.halting_rel, &space, scopes, lhs, rhs, s.span);
    if (s.halting_rel.form == SurfaceRelation::Form::Infix && s.halting_rel.infix.size() > 1)
        emit_infix_term_halting(lhs.kids.front(), s.span);
    emit_halting(std::move(lhs), s.span);
    emit_halting(std::move(rhs), s.span);
}

void Desugarer::data_statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes) {
    // `data τ*;` marks the pattern halting and derives Dup.
    VarSpace hspace;
    emit_halting(seq_pattern(s.data, &hspace, scopes), s.span);

    const SurfaceTerm& head = s.data.front();
    if (head.kind != SurfaceTerm::Kind::Atom)
        throw SyntaxError(head.span, "data declaration must start with an atom");
    AtomId head_atom = atom(head.atom, head.span, scopes);
    prog_.dup_covered.insert(head_atom);

    AtomId dup = atoms_.global("Dup");

    Definition d;
    d.kind = Definition::Kind::Rule;
    d.span = s.span;
    VarSpace vars;

    std::vector<Pattern> shape, shape_primed;
    shape.push_back(Pattern::make_atom(head_atom));
    shape_primed.push_back(Pattern::make_atom(head_atom));
    for (size_t i = 1; i < s.data.size(); ++i) {
        const SurfaceTerm& f = s.data[i];
        if (f.kind == SurfaceTerm::Kind::Var) {
            int32_t slot = vars.intern(f.var, f.span);
            int32_t slot2 = vars.intern(f.var + "'", f.span);
            shape.push_back(Pattern::var(slot));
            shape_primed.push_back(Pattern::var(slot2));
        } else if (f.kind == SurfaceTerm::Kind::Atom) {
            Pattern p = value(f, &vars, scopes);
            shape.push_back(p);
            shape_primed.push_back(p);
        } else {
            throw SyntaxError(f.span, "data fields must be variables or atoms");
        }
    }
    Pattern subject = shape.size() == 1 ? shape[0] : Pattern::composite(shape);
    Pattern subject2 = shape_primed.size() == 1 ? shape_primed[0] : Pattern::composite(shape_primed);
    Pattern infix = Pattern::composite({Pattern::make_atom(dup), subject});

    Pattern lhs = Pattern::composite({infix, Pattern::composite({})});
    Pattern rhs = Pattern::composite({Pattern::composite({}), subject2, infix});

    ContextPattern ctx;
    ctx.opaque = true;
    ctx.var_name = "&ctx";
    d.lhs.push_back(Party{ctx, lhs});
    d.rhs.push_back(Party{ctx, rhs});

    // One Dup sub-rule per variable field.
    for (size_t i = 1; i < shape.size(); ++i) {
        if (shape[i].kind != Pattern::Kind::Var) continue;
        Pattern fi = Pattern::composite({Pattern::make_atom(dup), shape[i]});
        SubRule sub;
        sub.lhs = Pattern::composite({fi, Pattern::composite({})});
        sub.rhs = Pattern::composite({Pattern::composite({}), shape_primed[i], fi});
        sub.cost = 1;
        sub.span = s.span;
        d.subs.push_back(std::move(sub));
    }

    d.num_vars = static_cast<int>(vars.names.size());
    d.var_names = vars.names;

    emit_generalized_halting(lhs, s.span);
    emit_generalized_halting(rhs, s.span);
    emit_infix_term_halting(infix, s.span);
    emit(std::move(d));
}

void Desugarer::rule_statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes) {
    Definition d;
    d.kind = Definition::Kind::Rule;
    d.span = s.span;
    d.suppress_ambiguity = s.suppress_ambiguity;
    VarSpace vars;

    uint32_t own_scope = atoms_.fresh_scope();

    if (!s.head.is_bag) {
        Pattern lhs, rhs;
        relation_sides(s.head.rel, &vars, scopes, lhs, rhs, s.span);
        if (s.head.rel.form == SurfaceRelation::Form::Infix) {
            // Implied halting patterns with argument variables generalized.
            emit_generalized_halting(lhs, s.span);
            emit_generalized_halting(rhs, s.span);
            if (s.head.rel.infix.size() > 1) emit_infix_term_halting(lhs.kids.front(), s.span);
        }
        ContextPattern ctx;
        ctx.opaque = true;
        ctx.var_name = "&ctx";
        d.lhs.push_back(Party{ctx, std::move(lhs)});
        d.rhs.push_back(Party{ctx, std::move(rhs)});
    } else {
        auto build_bag = [&](const std::vector<SurfaceParty>& in, std::vector<Party>& out) {
            int anon = 0;
            for (const auto& sp : in) {
                Party p;
                if (!sp.context) {
                    p.ctx.opaque = true;
                    p.ctx.var_name = "&anon" + std::to_string(anon++);
                } else if (sp.context->kind == SurfaceTerm::Kind::Var) {
                    p.ctx.opaque = true;
                    p.ctx.var_name = sp.context->var;
                } else {
                    p.ctx.opaque = false;
                    p.ctx.shape = value(*sp.context, &vars, scopes);
                }
                p.body = seq_pattern(sp.body, &vars, scopes);
                out.push_back(std::move(p));
            }
        };
        build_bag(s.head.lhs_bag, d.lhs);
        build_bag(s.head.rhs_bag, d.rhs);
        // A single party per side with one shared variable context is the
        // relation form written longhand; everything else is concurrent.
        bool relation_like = d.lhs.size() == 1 && d.rhs.size() == 1 && d.lhs[0].ctx.opaque && d.rhs[0].ctx.opaque &&
                             (s.head.lhs_bag[0].context && s.head.rhs_bag[0].context
                                  ? d.lhs[0].ctx.var_name == d.rhs[0].ctx.var_name
                                  : !s.head.lhs_bag[0].context && !s.head.rhs_bag[0].context);
        if (relation_like) {
            d.lhs[0].ctx.var_name = d.rhs[0].ctx.var_name = "&ctx";
        } else {
            d.concurrent = true;
        }
    }

    std::vector<uint32_t> body_scopes = scopes;
    body_scopes.push_back(own_scope);

    // Opaque sub-rule parties pair up by context variable.
    struct PendingParty {
        Pattern body;
        int cost;
        Span span;
    };
    std::map<std::string, PendingParty> pending;

    for (const auto& decl : s.decls) {
        switch (decl.kind) {
            case SurfaceDeclaration::Kind::SubRelation: {
                SubRule sub;
                relation_sides(decl.rel, &vars, body_scopes, sub.lhs, sub.rhs, decl.span);
                sub.cost = decl.cost;
                sub.span = decl.span;
                if (decl.halting) {
                    // `!ρ.` also hoists both sides as halting patterns, with
                    // their variables local to those patterns.
                    VarSpace tmp;
                    Pattern a, b;
                    relation_sides(decl.rel, &tmp, body_scopes, a, b, decl.span);
                    emit_halting(std::move(a), decl.span);
                    emit_halting(std::move(b), decl.span);
                }
                d.subs.push_back(std::move(sub));
                break;
            }
            case SurfaceDeclaration::Kind::SubParty: {
                const SurfaceTerm& ctx = *decl.party.context;
                if (ctx.kind != SurfaceTerm::Kind::Var) {
                    // Structural context: a top-level instantiation, only
                    // meaningful under the concurrent semantics.
                    d.concurrent = true;
                    prog_.warnings.push_back(Diagnostic{Severity::Warning, decl.span,
                                                        "sub-rule party with a structural context makes this rule "
                                                        "concurrent; it will not be evaluable"});
                    break;
                }
                Pattern body = seq_pattern(decl.party.body, &vars, body_scopes);
                auto it = pending.find(ctx.var);
                if (it == pending.end()) {
                    pending.emplace(ctx.var, PendingParty{std::move(body), decl.cost, decl.span});
                } else {
                    SubRule sub;
                    sub.lhs = std::move(it->second.body);
                    sub.rhs = std::move(body);
                    sub.cost = std::max(it->second.cost, decl.cost);
                    sub.span = it->second.span;
                    pending.erase(it);
                    d.subs.push_back(std::move(sub));
                }
                break;
            }
            case SurfaceDeclaration::Kind::Nested: {
                statement(*decl.nested, body_scopes);
                break;
            }
        }
    }
    if (!pending.empty()) {
        const auto& [name, p] = *pending.begin();
        throw SyntaxError(p.span, "sub-rule party '" + name + "' has no partner");
    }

    d.num_vars = static_cast<int>(vars.names.size());
    d.var_names = vars.names;
    emit(std::move(d));
}

void Desugarer::statement(const SurfaceStatement& s, std::vector<uint32_t>& scopes) {
    switch (s.kind) {
        case SurfaceStatement::Kind::Rule: rule_statement(s, scopes); break;
        case SurfaceStatement::Kind::HaltingDecl:
        case SurfaceStatement::Kind::HaltingRel: halting_statement(s, scopes); break;
        case SurfaceStatement::Kind::Data: data_statement(s, scopes); break;
        case SurfaceStatement::Kind::Import:
            throw SyntaxError(s.span, "import statements are only allowed at the top level of a file");
    }
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string read_file(const std::string& path, const Span& at) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SyntaxError(at, "cannot open file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Loader {
    AtomTable& atoms;
    Program& prog;
    const std::vector<std::string>& search_paths;
    std::set<std::string> visited;

    std::string resolve(const std::string& request, const std::string& importer, const Span& at) const {
        std::vector<fs::path> candidates;
        fs::path req(request);
        if (req.is_absolute()) {
            candidates.push_back(req);
        } else {
            if (!importer.empty()) candidates.push_back(fs::path(importer).parent_path() / req);
            candidates.push_back(req);
            for (const auto& dir : search_paths) candidates.push_back(fs::path(dir) / req);
        }
        for (const auto& c : candidates) {
            std::error_code ec;
            if (fs::exists(c, ec)) return fs::weakly_canonical(c, ec).string();
        }
        throw SyntaxError(at, "cannot resolve import \"" + request + "\"");
    }

    void process(const std::string& path, const Span& at) {
        std::error_code ec;
        std::string canon = fs::weakly_canonical(fs::path(path), ec).string();
        if (ec) canon = path;
        if (!visited.insert(canon).second) return;
        std::string text = read_file(canon, at);
        std::vector<SurfaceStatement> stmts = parse_program(text, canon);
        prog.files.push_back(canon);
        Desugarer ds(atoms, prog);
        std::vector<uint32_t> scopes;
        for (const auto& s : stmts) {
            if (s.kind == SurfaceStatement::Kind::Import) {
                process(resolve(s.import_path, canon, s.span), s.span);
            } else {
                ds.statement(s, scopes);
            }
        }
    }
};

}  // namespace

void resolve_special_atoms(Program& p, AtomTable& atoms) {
    p.atom_S = atoms.global("S");
    p.atom_Z = atoms.global("Z");
    p.atom_Cons = atoms.global("Cons");
    p.atom_Nil = atoms.global("Nil");
    p.atom_Garbage = atoms.global("Garbage");
    p.atom_Dup = atoms.global("Dup");
}

Program load_program(const std::vector<std::string>& entry_paths, const std::vector<std::string>& search_paths,
                     AtomTable& atoms, const std::vector<std::shared_ptr<SurfaceStatement>>& extra_statements) {
    Program prog;
    Loader loader{atoms, prog, search_paths, {}};
    for (const auto& p : entry_paths) loader.process(loader.resolve(p, "", Span{}), Span{});
    if (!extra_statements.empty()) {
        Desugarer ds(atoms, prog);
        std::vector<uint32_t> scopes;
        for (const auto& s : extra_statements)
            if (s) ds.statement(*s, scopes);
    }
    resolve_special_atoms(prog, atoms);
    return prog;
}

}  // namespace alethe
