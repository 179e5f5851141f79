#pragma once

#include <vector>

#include "index.hpp"
#include "kernel.hpp"

namespace alethe {

struct TraceEvent {
    int depth = 0;   // 0 = top-level term, >0 = nested sub-term evaluations
    Term term;       // state entering an evaluation step
    bool start;      // first state of an evaluation (sub-term instantiation)
};

struct EvalOptions {
    uint64_t step_limit = 1'000'000;
    // Dup sub-terms over data-declared shapes short-circuit to (t, t); the
    // generated rules compute exactly that, only slower. Disable to exercise
    // the rules themselves.
    bool builtin_dup = true;
    std::vector<TraceEvent>* trace = nullptr;
};

struct StallFrame {
    int def = -1;
    int sub = -1;
    Span span;
};

struct EvalOutcome {
    enum class Kind { Halted, Stalled, LimitExceeded };
    Kind kind = Kind::Halted;
    Term term;   // final term (Halted), or the stuck/over-limit sub-term
    uint64_t steps = 0;
    std::vector<StallFrame> chain;  // Stalled: innermost-first rule chain
};

// Evaluation rejects ill-posed requests (non-halting start term, ambiguous
// candidate sets, concurrent rules) by throwing; stalls and step-limit
// exhaustion are ordinary outcomes.
class EvalError : public std::runtime_error {
public:
    enum class Kind { NotHalting, Concurrent, Determinism, Internal };
    EvalError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

EvalOutcome evaluate(const Program& p, const Term& start, const EvalOptions& opts = {});

// Evaluates with p.index; the program must have been indexed.
// Convenience for tests: true when the term matches at least one halting
// pattern of the program.
bool matches_halting(const Program& p, const Term& t);

}  // namespace alethe
