#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace alethe {

// Source location of a token or construct. `file` is empty for REPL input.
struct Span {
    std::string file;
    int line = 0;  // 1-based; 0 = unknown
    int col = 0;   // 1-based

    std::string to_string() const {
        std::string where = file.empty() ? std::string("<input>") : file;
        if (line > 0) {
            where += ":" + std::to_string(line);
            if (col > 0) where += ":" + std::to_string(col);
        }
        return where;
    }
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
    Severity severity = Severity::Error;
    Span span;
    std::string message;

    std::string to_string() const {
        const char* tag = severity == Severity::Error     ? "error"
                          : severity == Severity::Warning ? "warning"
                                                          : "note";
        return span.to_string() + ": " + tag + ": " + message;
    }
};

// Lex/parse/desugar failures abort the current file or REPL line.
class SyntaxError : public std::runtime_error {
public:
    SyntaxError(Span span, const std::string& message)
        : std::runtime_error(span.to_string() + ": error: " + message), span_(std::move(span)) {}

    const Span& span() const { return span_; }

private:
    Span span_;
};

class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace alethe
