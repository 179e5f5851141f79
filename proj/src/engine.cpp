#include "engine.hpp"

namespace alethe {

namespace {

struct StallSignal {
    Term stuck;
    std::vector<StallFrame> chain;
};

struct LimitSignal {
    Term at;
};

struct Ctx {
    const Program& prog;
    const PatternTrie& trie;
    const EvalOptions& opts;
    uint64_t steps = 0;

    void tick(const Term& at) {
        if (++steps > opts.step_limit) throw LimitSignal{at};
    }
};

struct LastApplied {
    int def = -1;
    bool backward = false;
};

Term eval_term(Ctx& ctx, Term cur, int depth);

void clear_pattern_vars(const Pattern& p, Bindings& b) {
    uint64_t mask = pattern_vars(p);
    while (mask) {
        int slot = __builtin_ctzll(mask);
        mask &= mask - 1;
        b.clear(slot);
    }
}

// Recognizes instantiated Dup sub-terms: forward `(Dup x) ()`, backward
// `() x' (Dup x)`. Returns the shortcut result or a null term when the shape
// is not covered by a data declaration.
Term try_builtin_dup(Ctx& ctx, const Term& t, int depth) {
    const Program& p = ctx.prog;
    auto covered = [&](const Term& x) {
        if (x.is_atom()) return p.dup_covered.count(x.atom_id()) > 0;
        if (x.is_composite() && !x.kids().empty() && x.kids()[0].is_atom())
            return p.dup_covered.count(x.kids()[0].atom_id()) > 0;
        return false;
    };
    auto dup_headed = [&](const Term& c) {
        return c.is_composite() && c.size() == 2 && c.kids()[0].is_atom() && c.kids()[0].atom_id() == p.atom_Dup;
    };
    if (!t.is_composite()) return Term();
    if (t.size() == 2 && dup_headed(t.kids()[0]) && t.kids()[1].is_composite() && t.kids()[1].size() == 0) {
        const Term& x = t.kids()[0].kids()[1];
        if (!covered(x)) return Term();
        ctx.tick(t);
        if (ctx.opts.trace) ctx.opts.trace->push_back(TraceEvent{depth, t, true});
        return Term::composite({Term::unit(), x, t.kids()[0]});
    }
    if (t.size() == 3 && t.kids()[0].is_composite() && t.kids()[0].size() == 0 && dup_headed(t.kids()[2])) {
        const Term& x = t.kids()[2].kids()[1];
        const Term& copy = t.kids()[1];
        if (!covered(x)) return Term();
        ctx.tick(t);
        if (ctx.opts.trace) ctx.opts.trace->push_back(TraceEvent{depth, t, true});
        // Un-duplication requires the copies to agree; divergent copies stall.
        if (!equal(x, copy)) throw StallSignal{t, {}};
        return Term::composite({t.kids()[2], Term::unit()});
    }
    return Term();
}

Term apply_rule(Ctx& ctx, int def_index, bool backward, Bindings b, int depth) {
    const Definition& d = ctx.prog.defs[static_cast<size_t>(def_index)];
    const Plan& plan = backward ? d.bwd_plan : d.fwd_plan;
    if (!plan.valid)
        throw EvalError(EvalError::Kind::Internal, "rule at " + d.span.to_string() + " has no valid plan");
    for (const PlanStep& step : plan.steps) {
        const SubRule& s = d.subs[static_cast<size_t>(step.sub)];
        const Pattern& src = step.backward ? s.rhs : s.lhs;
        const Pattern& tgt = step.backward ? s.lhs : s.rhs;
        Term t = substitute(src, b, &d.var_names);
        clear_pattern_vars(src, b);
        Term result;
        try {
            if (ctx.opts.builtin_dup) result = try_builtin_dup(ctx, t, depth + 1);
            if (result.is_null()) result = eval_term(ctx, std::move(t), depth + 1);
        } catch (StallSignal& sig) {
            sig.chain.push_back(StallFrame{def_index, step.sub, s.span});
            throw;
        }
        if (!unify(tgt, result, b)) {
            StallSignal sig{result, {}};
            sig.chain.push_back(StallFrame{def_index, step.sub, s.span});
            throw sig;
        }
    }
    const Pattern& out = backward ? d.lhs_pattern() : d.rhs_pattern();
    return substitute(out, b, &d.var_names);
}

Term eval_term(Ctx& ctx, Term cur, int depth) {
    LastApplied last;
    bool first = true;
    while (true) {
        if (ctx.opts.trace) ctx.opts.trace->push_back(TraceEvent{depth, cur, first});

        std::vector<PatternTrie::Hit> hits;
        ctx.trie.candidates(cur, hits);

        bool halting = false;
        int comp_def = -1;
        bool comp_backward = false;
        Bindings comp_bindings{0};
        int comp_count = 0;

        for (const auto& h : hits) {
            const Definition& d = ctx.prog.defs[static_cast<size_t>(h.def)];
            if (h.side == PatternTrie::Side::Halting) {
                if (!halting) {
                    Bindings b(static_cast<size_t>(d.num_vars));
                    if (unify(d.halting, cur, b)) halting = true;
                }
                continue;
            }
            bool backward = h.side == PatternTrie::Side::Backward;
            // Directional momentum: exclude the converse of the rule that
            // produced this term.
            if (h.def == last.def && backward != last.backward) continue;
            const Pattern& pat = backward ? d.rhs[static_cast<size_t>(h.party)].body
                                          : d.lhs[static_cast<size_t>(h.party)].body;
            Bindings b(static_cast<size_t>(d.num_vars));
            if (!unify(pat, cur, b)) continue;
            ++comp_count;
            if (comp_count > 1)
                throw EvalError(EvalError::Kind::Determinism,
                                "ambiguous evaluation: more than one applicable rule for a term; "
                                "the program should have been rejected by the ambiguity checker");
            comp_def = h.def;
            comp_backward = backward;
            comp_bindings = std::move(b);
        }

        if (comp_count == 1) {
            const Definition& d = ctx.prog.defs[static_cast<size_t>(comp_def)];
            if (d.concurrent)
                throw EvalError(EvalError::Kind::Concurrent,
                                "term matches a concurrent rule (" + d.span.to_string() +
                                    "); evaluating concurrent rules is not supported");
            ctx.tick(cur);
            cur = apply_rule(ctx, comp_def, comp_backward, std::move(comp_bindings), depth);
            last = LastApplied{comp_def, comp_backward};
            first = false;
            continue;
        }
        if (first || halting) return cur;  // data fixed point, or a proper halt
        throw StallSignal{cur, {}};
    }
}

}  // namespace

bool matches_halting(const Program& p, const Term& t) {
    if (!p.index) throw InternalError("program has no index");
    std::vector<PatternTrie::Hit> hits;
    p.index->candidates(t, hits);
    for (const auto& h : hits) {
        if (h.side != PatternTrie::Side::Halting) continue;
        const Definition& d = p.defs[static_cast<size_t>(h.def)];
        Bindings b(static_cast<size_t>(d.num_vars));
        if (unify(d.halting, t, b)) return true;
    }
    return false;
}

EvalOutcome evaluate(const Program& p, const Term& start, const EvalOptions& opts) {
    if (!p.index) throw InternalError("program has no index");
    if (!start.is_composite())
        throw EvalError(EvalError::Kind::NotHalting, "evaluation takes a term sequence");
    if (!matches_halting(p, start))
        throw EvalError(EvalError::Kind::NotHalting,
                        "term does not match any halting pattern; only halting terms can be constructed");
    Ctx ctx{p, *p.index, opts, 0};
    EvalOutcome out;
    try {
        out.term = eval_term(ctx, start, 0);
        out.kind = EvalOutcome::Kind::Halted;
    } catch (StallSignal& sig) {
        out.kind = EvalOutcome::Kind::Stalled;
        out.term = std::move(sig.stuck);
        out.chain = std::move(sig.chain);
    } catch (LimitSignal& sig) {
        out.kind = EvalOutcome::Kind::LimitExceeded;
        out.term = std::move(sig.at);
    }
    out.steps = ctx.steps;
    return out;
}

}  // namespace alethe
