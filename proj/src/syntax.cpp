#include "syntax.hpp"

#include <algorithm>
#include <cstdint>

namespace alethe {

namespace {

bool is_reserved(char c) {
    switch (c) {
        case '(': case ')': case '[': case ']': case '{': case '}':
        case ':': case ';': case '.': case '`': case '"': return true;
        default: return false;
    }
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

struct Range {
    uint32_t lo, hi;
};

// Common general-category Ll ranges; enough for the corpora this grammar is
// used with. Unknown codepoints are treated as neither case.
constexpr Range kLower[] = {
    {0x61, 0x7a},     {0xdf, 0xf6},     {0xf8, 0xff},     {0x101, 0x101},   {0x103, 0x103},
    {0x105, 0x105},   {0x107, 0x107},   {0x109, 0x109},   {0x10b, 0x10b},   {0x10d, 0x10d},
    {0x3b1, 0x3c9},   {0x430, 0x44f},   {0x450, 0x45f},   {0x1e01, 0x1e01}, {0x2071, 0x2071},
};
constexpr Range kUpper[] = {
    {0x41, 0x5a},   {0xc0, 0xd6},   {0xd8, 0xde},   {0x100, 0x100}, {0x102, 0x102},
    {0x391, 0x3a9}, {0x410, 0x42f}, {0x400, 0x40f},
};

bool in_ranges(uint32_t cp, const Range* rs, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (cp >= rs[i].lo && cp <= rs[i].hi) return true;
    return false;
}

}  // namespace

bool codepoint_is_lower(uint32_t cp) { return in_ranges(cp, kLower, sizeof(kLower) / sizeof(kLower[0])); }
bool codepoint_is_upper(uint32_t cp) { return in_ranges(cp, kUpper, sizeof(kUpper) / sizeof(kUpper[0])); }

uint32_t first_codepoint(const std::string& s) {
    if (s.empty()) return 0;
    unsigned char c0 = static_cast<unsigned char>(s[0]);
    if (c0 < 0x80) return c0;
    uint32_t cp = 0;
    int len = 0;
    if ((c0 & 0xe0) == 0xc0) {
        cp = c0 & 0x1f;
        len = 2;
    } else if ((c0 & 0xf0) == 0xe0) {
        cp = c0 & 0x0f;
        len = 3;
    } else if ((c0 & 0xf8) == 0xf0) {
        cp = c0 & 0x07;
        len = 4;
    } else {
        return c0;
    }
    if (s.size() < static_cast<size_t>(len)) return c0;
    for (int i = 1; i < len; ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3f);
    return cp;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

class Lexer {
public:
    Lexer(const std::string& src, std::string file) : src_(src), file_(std::move(file)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments(out);
            if (eof()) break;
            Span sp = here();
            char c = peek();
            if (c == '.') {
                int n = 0;
                while (!eof() && peek() == '.') {
                    ++n;
                    advance();
                }
                out.push_back(Token{TokKind::Dots, std::string(static_cast<size_t>(n), '.'), n, sp});
            } else if (c == '`') {
                advance();
                out.push_back(Token{TokKind::Backtick, "`", 0, sp});
            } else if (c == '"') {
                out.push_back(Token{TokKind::String, scan_string(sp), 0, sp});
            } else if (c == '#' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '"') {
                advance();
                Span s2 = here();
                out.push_back(Token{TokKind::HashString, scan_string(s2), 0, sp});
            } else if (is_reserved(c)) {
                advance();
                out.push_back(Token{TokKind::Punct, std::string(1, c), 0, sp});
            } else {
                std::string word;
                while (!eof() && !is_space(peek()) && !is_reserved(peek())) {
                    // A '#"' run inside a word would start a string; stop the
                    // word so the next token picks it up.
                    if (peek() == '#' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '"' && !word.empty()) break;
                    word += peek();
                    advance();
                }
                out.push_back(Token{TokKind::Word, std::move(word), 0, sp});
            }
        }
        out.push_back(Token{TokKind::End, "", 0, here()});
        return out;
    }

private:
    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }
    char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }
    Span here() const { return Span{file_, line_, col_}; }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            // Count columns in bytes except UTF-8 continuation bytes.
            if ((static_cast<unsigned char>(src_[pos_]) & 0xc0) != 0x80) ++col_;
        }
        ++pos_;
    }

    void skip_space_and_comments(std::vector<Token>& out) {
        while (!eof()) {
            if (is_space(peek())) {
                advance();
            } else if (peek() == '-' && peek2() == '-') {
                Span sp = here();
                std::string body;
                while (!eof() && peek() != '\n') {
                    body += peek();
                    advance();
                }
                // Strip leading dashes and whitespace to find a directive.
                size_t i = 0;
                while (i < body.size() && body[i] == '-') ++i;
                while (i < body.size() && is_space(body[i])) ++i;
                if (body.compare(i, 10, "@ambiguous") == 0)
                    out.push_back(Token{TokKind::Pragma, "@ambiguous", 0, sp});
            } else if (peek() == '{' && peek2() == '-') {
                Span sp = here();
                advance();
                advance();
                int depth = 1;
                while (!eof() && depth > 0) {
                    if (peek() == '{' && peek2() == '-') {
                        advance();
                        advance();
                        ++depth;
                    } else if (peek() == '-' && peek2() == '}') {
                        advance();
                        advance();
                        --depth;
                    } else {
                        advance();
                    }
                }
                if (depth > 0) throw SyntaxError(sp, "unterminated block comment");
            } else {
                return;
            }
        }
    }

    std::string scan_string(Span sp) {
        advance();  // opening quote
        std::string out;
        while (true) {
            if (eof()) throw SyntaxError(sp, "unterminated string");
            char c = peek();
            if (c == '"') {
                advance();
                return out;
            }
            if (c == '\\') {
                advance();
                if (eof()) throw SyntaxError(sp, "unterminated string escape");
                char e = peek();
                if (e == 'n') {
                    out += '\n';
                    advance();
                } else if (e == 't') {
                    out += '\t';
                    advance();
                } else if (e == '\\' || e == '"' || e == '\'') {
                    out += e;
                    advance();
                } else if (e >= '0' && e <= '9') {
                    uint32_t v = 0;
                    while (!eof() && peek() >= '0' && peek() <= '9') {
                        v = v * 10 + static_cast<uint32_t>(peek() - '0');
                        advance();
                    }
                    if (v > 0x10ffff) throw SyntaxError(here(), "character escape out of range");
                    // encode UTF-8
                    if (v < 0x80) {
                        out += static_cast<char>(v);
                    } else if (v < 0x800) {
                        out += static_cast<char>(0xc0 | (v >> 6));
                        out += static_cast<char>(0x80 | (v & 0x3f));
                    } else if (v < 0x10000) {
                        out += static_cast<char>(0xe0 | (v >> 12));
                        out += static_cast<char>(0x80 | ((v >> 6) & 0x3f));
                        out += static_cast<char>(0x80 | (v & 0x3f));
                    } else {
                        out += static_cast<char>(0xf0 | (v >> 18));
                        out += static_cast<char>(0x80 | ((v >> 12) & 0x3f));
                        out += static_cast<char>(0x80 | ((v >> 6) & 0x3f));
                        out += static_cast<char>(0x80 | (v & 0x3f));
                    }
                } else {
                    throw SyntaxError(here(), std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
                advance();
            }
        }
    }

    const std::string& src_;
    std::string file_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(const std::string& source, const std::string& file) {
    return Lexer(source, file).run();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

bool word_is_all_digits(const std::string& w) {
    if (w.empty()) return false;
    for (char c : w)
        if (c < '0' || c > '9') return false;
    return true;
}

std::string decode_char_escape(const std::string& body, const Span& sp) {
    // body is the text after the leading quote; returns the single character.
    if (body.empty()) throw SyntaxError(sp, "empty character atom");
    if (body[0] == '\\') {
        if (body.size() < 2) throw SyntaxError(sp, "unterminated character escape");
        char e = body[1];
        if (e == 'n' && body.size() == 2) return "\n";
        if (e == 't' && body.size() == 2) return "\t";
        if ((e == '\\' || e == '\'' || e == '"') && body.size() == 2) return std::string(1, e);
        if (e >= '0' && e <= '9') {
            uint32_t v = 0;
            for (size_t i = 1; i < body.size(); ++i) {
                if (body[i] < '0' || body[i] > '9') throw SyntaxError(sp, "bad character escape");
                v = v * 10 + static_cast<uint32_t>(body[i] - '0');
            }
            std::string out;
            if (v < 0x80) {
                out += static_cast<char>(v);
            } else if (v < 0x800) {
                out += static_cast<char>(0xc0 | (v >> 6));
                out += static_cast<char>(0x80 | (v & 0x3f));
            } else if (v < 0x10000) {
                out += static_cast<char>(0xe0 | (v >> 12));
                out += static_cast<char>(0x80 | ((v >> 6) & 0x3f));
                out += static_cast<char>(0x80 | (v & 0x3f));
            } else {
                out += static_cast<char>(0xf0 | (v >> 18));
                out += static_cast<char>(0x80 | ((v >> 12) & 0x3f));
                out += static_cast<char>(0x80 | ((v >> 6) & 0x3f));
                out += static_cast<char>(0x80 | (v & 0x3f));
            }
            return out;
        }
        throw SyntaxError(sp, "unsupported character escape");
    }
    // One UTF-8 codepoint, possibly multi-byte.
    size_t len = 1;
    unsigned char c0 = static_cast<unsigned char>(body[0]);
    if ((c0 & 0xe0) == 0xc0) len = 2;
    else if ((c0 & 0xf0) == 0xe0) len = 3;
    else if ((c0 & 0xf8) == 0xf0) len = 4;
    if (body.size() != len) throw SyntaxError(sp, "character atom must be a single character");
    return body;
}

class Parser {
public:
    Parser(std::vector<Token> toks, bool dash_is_blank = false)
        : toks_(std::move(toks)), dash_is_blank_(dash_is_blank) {}

    std::vector<SurfaceStatement> program() {
        std::vector<SurfaceStatement> out;
        while (true) {
            bool pragma = consume_pragmas();
            if (peek().kind == TokKind::End) break;
            SurfaceStatement s = statement();
            s.suppress_ambiguity = pragma;
            out.push_back(std::move(s));
        }
        return out;
    }

    // For REPL use.
    std::vector<SurfaceTerm> terms_to_end() {
        std::vector<SurfaceTerm> out;
        while (peek().kind != TokKind::End) out.push_back(term());
        return out;
    }
    SurfaceRelation relation_to_end(bool allow_bare) {
        SurfaceRelation r = relation(allow_bare, [](const Token& t) { return t.kind == TokKind::End; });
        return r;
    }
    SurfaceStatement single_statement() {
        bool pragma = consume_pragmas();
        SurfaceStatement s = statement();
        s.suppress_ambiguity = pragma;
        if (peek().kind != TokKind::End) throw err("unexpected trailing input after statement");
        return s;
    }

private:
    const Token& peek(size_t ahead = 0) const {
        size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    const Token& next() {
        const Token& t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    SyntaxError err(const std::string& msg) const { return SyntaxError(peek().span, msg); }

    bool consume_pragmas() {
        bool any = false;
        while (peek().kind == TokKind::Pragma) {
            any = true;
            next();
        }
        return any;
    }

    // ---- terms ----

    SurfaceTerm term() {
        const Token& t = peek();
        switch (t.kind) {
            case TokKind::Punct:
                if (t.text == "(") return composite();
                if (t.text == "[") return list();
                throw err("expected a term, found '" + t.text + "'");
            case TokKind::Word: return word_term();
            case TokKind::String: {
                SurfaceTerm s;
                s.kind = SurfaceTerm::Kind::String;
                s.text = t.text;
                s.span = t.span;
                next();
                return s;
            }
            case TokKind::HashString: {
                SurfaceTerm s;
                s.kind = SurfaceTerm::Kind::Atom;
                s.atom = SurfaceAtom{SurfaceAtom::Kind::Escaped, t.text, 0};
                s.span = t.span;
                next();
                return s;
            }
            default: throw err("expected a term");
        }
    }

    SurfaceTerm composite() {
        Span sp = peek().span;
        next();  // (
        SurfaceTerm s;
        s.kind = SurfaceTerm::Kind::Composite;
        s.span = sp;
        while (!peek().is_punct(')')) {
            if (peek().kind == TokKind::End) throw SyntaxError(sp, "unterminated '('");
            s.kids.push_back(term());
        }
        next();  // )
        return s;
    }

    SurfaceTerm list() {
        Span sp = peek().span;
        next();  // [
        SurfaceTerm s;
        s.kind = SurfaceTerm::Kind::List;
        s.span = sp;
        while (!peek().is_punct(']')) {
            if (peek().kind == TokKind::End) throw SyntaxError(sp, "unterminated '['");
            if (peek().kind == TokKind::Dots) {
                if (peek().dots != 1) throw err("expected single '.' in dotted list");
                if (s.kids.empty()) throw err("dotted list needs at least one element");
                next();
                s.kids.push_back(term());
                s.list_has_tail = true;
                if (!peek().is_punct(']')) throw err("expected ']' after dotted tail");
                break;
            }
            s.kids.push_back(term());
        }
        next();  // ]
        return s;
    }

    SurfaceTerm word_term() {
        const Token& t = next();
        SurfaceTerm s;
        s.span = t.span;
        const std::string& w = t.text;
        if (w == "_" || (dash_is_blank_ && (w == "-" || w == "–"))) {
            s.kind = SurfaceTerm::Kind::Blank;
            return s;
        }
        if (word_is_all_digits(w)) {
            s.kind = SurfaceTerm::Kind::Natural;
            s.natural = 0;
            for (char c : w) {
                if (s.natural > (UINT64_MAX - 9) / 10) throw SyntaxError(t.span, "numeral too large");
                s.natural = s.natural * 10 + static_cast<uint64_t>(c - '0');
            }
            return s;
        }
        if (w[0] == '\'') {
            s.kind = SurfaceTerm::Kind::Atom;
            s.atom = SurfaceAtom{SurfaceAtom::Kind::Character, decode_char_escape(w.substr(1), t.span), 0};
            return s;
        }
        if (w[0] == '~') {
            int tildes = 0;
            size_t i = 0;
            while (i < w.size() && w[i] == '~') {
                ++tildes;
                ++i;
            }
            s.kind = SurfaceTerm::Kind::Atom;
            s.atom = SurfaceAtom{SurfaceAtom::Kind::Plain, w.substr(i), tildes};
            return s;
        }
        if (w[0] == '#') {
            s.kind = SurfaceTerm::Kind::Atom;
            s.atom = SurfaceAtom{SurfaceAtom::Kind::Escaped, w.substr(1), 0};
            return s;
        }
        uint32_t cp = first_codepoint(w);
        if (codepoint_is_lower(cp)) {
            s.kind = SurfaceTerm::Kind::Var;
            s.var = w;
            return s;
        }
        s.kind = SurfaceTerm::Kind::Atom;
        s.atom = SurfaceAtom{SurfaceAtom::Kind::Plain, w, 0};
        return s;
    }

    static bool is_symbol_atom(const SurfaceTerm& t) {
        if (t.kind != SurfaceTerm::Kind::Atom) return false;
        if (t.atom.kind != SurfaceAtom::Kind::Plain || t.atom.tildes != 0 || t.atom.name.empty()) return false;
        uint32_t cp = first_codepoint(t.atom.name);
        if (cp >= '0' && cp <= '9') return false;
        return !codepoint_is_lower(cp) && !codepoint_is_upper(cp);
    }

    // ---- relations ----

    template <typename Stop>
    SurfaceRelation relation(bool allow_bare, Stop at_stop) {
        SurfaceRelation r;
        std::vector<SurfaceTerm> items;
        bool saw_eq = false, saw_infix = false;
        while (!at_stop(peek())) {
            if (peek().kind == TokKind::End) throw err("unexpected end of input in relation");
            if (peek().is_word("=") && !saw_eq && !saw_infix) {
                next();
                saw_eq = true;
                r.lhs = std::move(items);
                items.clear();
                continue;
            }
            if (peek().kind == TokKind::Backtick) {
                if (saw_eq || saw_infix) throw err("unexpected '`'");
                next();
                saw_infix = true;
                r.lhs = std::move(items);
                items.clear();
                while (peek().kind != TokKind::Backtick) {
                    if (peek().kind == TokKind::End) throw err("unterminated '`' segment");
                    r.infix.push_back(term());
                }
                next();  // closing backtick
                if (r.infix.empty()) throw err("empty '`' segment");
                continue;
            }
            items.push_back(term());
        }
        if (saw_eq) {
            r.form = SurfaceRelation::Form::Eq;
            r.rhs = std::move(items);
        } else if (saw_infix) {
            r.form = SurfaceRelation::Form::Infix;
            r.rhs = std::move(items);
        } else if (allow_bare) {
            // Bare-symbol infix: the first top-level symbol atom separates the
            // sides; `#sym` suppresses this reading.
            size_t k = items.size();
            for (size_t i = 0; i < items.size(); ++i)
                if (is_symbol_atom(items[i])) {
                    k = i;
                    break;
                }
            if (k < items.size()) {
                r.form = SurfaceRelation::Form::Infix;
                r.infix.push_back(items[k]);
                r.lhs.assign(items.begin(), items.begin() + static_cast<long>(k));
                r.rhs.assign(items.begin() + static_cast<long>(k) + 1, items.end());
            } else {
                r.form = SurfaceRelation::Form::Plain;
                r.lhs = std::move(items);
            }
        } else {
            r.form = SurfaceRelation::Form::Plain;
            r.lhs = std::move(items);
        }
        return r;
    }

    SurfaceRelation relation_until_punct(bool allow_bare) {
        return relation(allow_bare, [](const Token& t) {
            return (t.kind == TokKind::Punct && (t.text == ";" || t.text == ":")) || t.kind == TokKind::Dots;
        });
    }

    // ---- statements ----

    SurfaceStatement statement() {
        const Token& t0 = peek();
        SurfaceStatement s;
        s.span = t0.span;
        if (t0.is_word("!")) {
            next();
            s.halting_rel = relation_until_punct(false);
            if (!peek().is_punct(';')) throw err("expected ';' after halting declaration");
            next();
            if (s.halting_rel.form == SurfaceRelation::Form::Plain) {
                s.kind = SurfaceStatement::Kind::HaltingDecl;
                s.halting = std::move(s.halting_rel.lhs);
                if (s.halting.empty()) throw SyntaxError(s.span, "empty halting pattern");
            } else {
                s.kind = SurfaceStatement::Kind::HaltingRel;
            }
            return s;
        }
        if (t0.is_word("data")) {
            next();
            s.kind = SurfaceStatement::Kind::Data;
            while (!peek().is_punct(';')) {
                if (peek().kind == TokKind::End) throw SyntaxError(s.span, "expected ';' after data declaration");
                s.data.push_back(term());
            }
            next();
            if (s.data.empty()) throw SyntaxError(s.span, "empty data declaration");
            return s;
        }
        if (t0.is_word("import")) {
            next();
            if (peek().kind != TokKind::String) throw err("expected quoted path after import");
            s.kind = SurfaceStatement::Kind::Import;
            s.import_path = next().text;
            if (!peek().is_punct(';')) throw err("expected ';' after import");
            next();
            return s;
        }
        // Rule statement.
        s.kind = SurfaceStatement::Kind::Rule;
        s.head.span = t0.span;
        if (t0.is_punct('{')) {
            s.head.is_bag = true;
            s.head.lhs_bag = bag();
            if (!peek().is_word("=")) throw err("expected '=' between party bags");
            next();
            if (!peek().is_punct('{')) throw err("expected '{' after '='");
            s.head.rhs_bag = bag();
        } else {
            s.head.rel = relation_until_punct(true);
            if (s.head.rel.form == SurfaceRelation::Form::Plain)
                throw SyntaxError(s.span, "expected a rule ('=' or '`f`' relation), halting declaration, data or import");
        }
        if (peek().is_punct(';')) {
            next();
            return s;
        }
        if (peek().is_punct(':')) {
            next();
            declarations(s, t0.span);
            if (s.decls.empty()) throw SyntaxError(s.span, "rule head followed by ':' needs declarations");
            return s;
        }
        throw err("expected ';' or ':' after rule head");
    }

    std::vector<SurfaceParty> bag() {
        next();  // {
        std::vector<SurfaceParty> parties;
        while (true) {
            SurfaceParty p;
            p.span = peek().span;
            // Optional "context :" prefix.
            size_t save = pos_;
            if (!peek().is_punct('}') && !peek().is_punct(';')) {
                SurfaceTerm first = term();
                if (peek().is_punct(':')) {
                    next();
                    p.context = std::move(first);
                } else {
                    pos_ = save;
                }
            }
            while (!peek().is_punct(';') && !peek().is_punct('}')) {
                if (peek().kind == TokKind::End) throw err("unterminated party bag");
                p.body.push_back(term());
            }
            parties.push_back(std::move(p));
            if (peek().is_punct(';')) {
                next();
                continue;
            }
            next();  // }
            return parties;
        }
    }

    void declarations(SurfaceStatement& rule, const Span& head) {
        while (true) {
            bool pragma = consume_pragmas();
            const Token& t = peek();
            if (t.kind == TokKind::End) break;
            bool attached = t.span.line == head.line || t.span.col > head.col;
            if (!attached) {
                if (pragma) throw err("dangling pragma");
                break;
            }
            rule.decls.push_back(declaration(pragma));
        }
    }

    // Lookahead for the token class (';', ':', '.', or 'e'nd) that terminates
    // the declaration starting here.
    char terminator_punct() const {
        size_t i = pos_;
        int depth = 0;
        while (i < toks_.size()) {
            const Token& t = toks_[i];
            if (t.kind == TokKind::Punct) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
                else if ((t.text == ";" || t.text == ":") && depth == 0) return t.text[0];
            } else if (t.kind == TokKind::Dots && depth == 0) {
                return '.';
            } else if (t.kind == TokKind::End) {
                return 'e';
            }
            ++i;
        }
        return 'e';
    }

    SurfaceDeclaration declaration(bool pragma) {
        SurfaceDeclaration d;
        d.span = peek().span;
        const Token& t0 = peek();

        if (t0.is_punct('{')) {
            d.kind = SurfaceDeclaration::Kind::Nested;
            d.nested = std::make_unique<SurfaceStatement>(statement());
            d.nested->suppress_ambiguity = pragma;
            return d;
        }
        if (t0.is_word("!")) {
            char term_punct = terminator_punct();
            if (term_punct == '.') {
                next();  // !
                d.kind = SurfaceDeclaration::Kind::SubRelation;
                d.halting = true;
                d.rel = relation_until_punct(true);
                if (d.rel.form == SurfaceRelation::Form::Plain)
                    throw SyntaxError(d.span, "'!' sub-declaration must be a relation");
                d.cost = next().dots;
                return d;
            }
            d.kind = SurfaceDeclaration::Kind::Nested;
            d.nested = std::make_unique<SurfaceStatement>(statement());
            d.nested->suppress_ambiguity = pragma;
            return d;
        }
        // Party probe: one term followed by ':' (a declaration can also begin
        // with '`', which never opens a party).
        if (t0.kind != TokKind::Backtick) {
            size_t save = pos_;
            bool is_party = false;
            try {
                SurfaceTerm first = term();
                is_party = peek().is_punct(':');
                if (is_party) {
                    next();
                    d.kind = SurfaceDeclaration::Kind::SubParty;
                    d.party.span = d.span;
                    d.party.context = std::move(first);
                }
            } catch (const SyntaxError&) {
                is_party = false;
            }
            if (is_party) {
                while (peek().kind != TokKind::Dots) {
                    if (peek().kind == TokKind::End) throw err("expected '.' after sub-rule party");
                    d.party.body.push_back(term());
                }
                d.cost = next().dots;
                return d;
            }
            pos_ = save;
        }
        char tp = terminator_punct();
        if (tp == '.') {
            d.kind = SurfaceDeclaration::Kind::SubRelation;
            d.rel = relation_until_punct(true);
            if (d.rel.form == SurfaceRelation::Form::Plain)
                throw SyntaxError(d.span, "sub-declaration is not a relation; expected '=' or '`f`'");
            d.cost = next().dots;
            return d;
        }
        if (tp == ';' || tp == ':') {
            d.kind = SurfaceDeclaration::Kind::Nested;
            d.nested = std::make_unique<SurfaceStatement>(statement());
            d.nested->suppress_ambiguity = pragma;
            return d;
        }
        throw err("expected declaration");
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
    bool dash_is_blank_ = false;
};

}  // namespace

std::vector<SurfaceStatement> parse_program(std::vector<Token> tokens) {
    return Parser(std::move(tokens)).program();
}

std::vector<SurfaceStatement> parse_program(const std::string& source, const std::string& file) {
    return parse_program(tokenize(source, file));
}

// ---------------------------------------------------------------------------
// Surface rendering

namespace {

void escape_into(std::string& out, const std::string& s) {
    for (char c : s) {
        if (c == '\\') out += "\\\\";
        else if (c == '"') out += "\\\"";
        else if (c == '\n') out += "\\n";
        else if (c == '\t') out += "\\t";
        else out += c;
    }
}

void render_term(std::string& out, const SurfaceTerm& t) {
    switch (t.kind) {
        case SurfaceTerm::Kind::Atom:
            switch (t.atom.kind) {
                case SurfaceAtom::Kind::Plain:
                    out.append(static_cast<size_t>(t.atom.tildes), '~');
                    out += t.atom.name;
                    break;
                case SurfaceAtom::Kind::Escaped:
                    out += "#\"";
                    escape_into(out, t.atom.name);
                    out += '"';
                    break;
                case SurfaceAtom::Kind::Character:
                    out += '\'';
                    if (t.atom.name == "\n") out += "\\n";
                    else if (t.atom.name == "\t") out += "\\t";
                    else if (t.atom.name == "\\") out += "\\\\";
                    else out += t.atom.name;
                    break;
            }
            break;
        case SurfaceTerm::Kind::Var: out += t.var; break;
        case SurfaceTerm::Kind::Composite: {
            out += '(';
            for (size_t i = 0; i < t.kids.size(); ++i) {
                if (i) out += ' ';
                render_term(out, t.kids[i]);
            }
            out += ')';
            break;
        }
        case SurfaceTerm::Kind::Natural: out += std::to_string(t.natural); break;
        case SurfaceTerm::Kind::String:
            out += '"';
            escape_into(out, t.text);
            out += '"';
            break;
        case SurfaceTerm::Kind::List: {
            out += '[';
            size_t n = t.kids.size();
            for (size_t i = 0; i < n; ++i) {
                if (i) out += ' ';
                if (t.list_has_tail && i + 1 == n) out += ". ";
                render_term(out, t.kids[i]);
            }
            out += ']';
            break;
        }
        case SurfaceTerm::Kind::Blank: out += '_'; break;
    }
}

void render_terms(std::string& out, const std::vector<SurfaceTerm>& ts) {
    for (size_t i = 0; i < ts.size(); ++i) {
        if (i) out += ' ';
        render_term(out, ts[i]);
    }
}

void render_relation(std::string& out, const SurfaceRelation& r) {
    switch (r.form) {
        case SurfaceRelation::Form::Plain: render_terms(out, r.lhs); break;
        case SurfaceRelation::Form::Eq:
            render_terms(out, r.lhs);
            out += " = ";
            render_terms(out, r.rhs);
            break;
        case SurfaceRelation::Form::Infix:
            render_terms(out, r.lhs);
            if (!r.lhs.empty()) out += ' ';
            out += '`';
            render_terms(out, r.infix);
            out += '`';
            if (!r.rhs.empty()) out += ' ';
            render_terms(out, r.rhs);
            break;
    }
}

void render_party(std::string& out, const SurfaceParty& p) {
    if (p.context) {
        render_term(out, *p.context);
        out += ": ";
    }
    render_terms(out, p.body);
}

void render_statement(std::string& out, const SurfaceStatement& s, int indent);

void render_declaration(std::string& out, const SurfaceDeclaration& d, int indent) {
    out.append(static_cast<size_t>(indent), ' ');
    switch (d.kind) {
        case SurfaceDeclaration::Kind::SubRelation:
            if (d.halting) out += "! ";
            render_relation(out, d.rel);
            out.append(static_cast<size_t>(d.cost), '.');
            out += '\n';
            break;
        case SurfaceDeclaration::Kind::SubParty:
            render_party(out, d.party);
            out.append(static_cast<size_t>(d.cost), '.');
            out += '\n';
            break;
        case SurfaceDeclaration::Kind::Nested: {
            std::string nested;
            render_statement(nested, *d.nested, indent);
            // render_statement already indents; drop our own prefix
            out.resize(out.size() - static_cast<size_t>(indent));
            out += nested;
            break;
        }
    }
}

void render_statement(std::string& out, const SurfaceStatement& s, int indent) {
    if (s.suppress_ambiguity) {
        out.append(static_cast<size_t>(indent), ' ');
        out += "-- @ambiguous\n";
    }
    out.append(static_cast<size_t>(indent), ' ');
    switch (s.kind) {
        case SurfaceStatement::Kind::HaltingDecl:
            out += "! ";
            render_terms(out, s.halting);
            out += ";\n";
            break;
        case SurfaceStatement::Kind::HaltingRel:
            out += "! ";
            render_relation(out, s.halting_rel);
            out += ";\n";
            break;
        case SurfaceStatement::Kind::Data:
            out += "data ";
            render_terms(out, s.data);
            out += ";\n";
            break;
        case SurfaceStatement::Kind::Import:
            out += "import \"";
            escape_into(out, s.import_path);
            out += "\";\n";
            break;
        case SurfaceStatement::Kind::Rule: {
            if (s.head.is_bag) {
                out += '{';
                for (size_t i = 0; i < s.head.lhs_bag.size(); ++i) {
                    if (i) out += "; ";
                    render_party(out, s.head.lhs_bag[i]);
                }
                out += "} = {";
                for (size_t i = 0; i < s.head.rhs_bag.size(); ++i) {
                    if (i) out += "; ";
                    render_party(out, s.head.rhs_bag[i]);
                }
                out += '}';
            } else {
                render_relation(out, s.head.rel);
            }
            if (s.decls.empty()) {
                out += ";\n";
            } else {
                out += ":\n";
                for (const auto& d : s.decls) render_declaration(out, d, indent + 4);
            }
            break;
        }
    }
}

}  // namespace

std::string render_surface(const SurfaceTerm& t) {
    std::string out;
    render_term(out, t);
    return out;
}

std::string render_surface(const std::vector<SurfaceStatement>& program) {
    std::string out;
    for (const auto& s : program) render_statement(out, s, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Structural equality of surface trees

bool surface_equal(const SurfaceTerm& a, const SurfaceTerm& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case SurfaceTerm::Kind::Atom:
            return a.atom.kind == b.atom.kind && a.atom.name == b.atom.name && a.atom.tildes == b.atom.tildes;
        case SurfaceTerm::Kind::Var: return a.var == b.var;
        case SurfaceTerm::Kind::Natural: return a.natural == b.natural;
        case SurfaceTerm::Kind::String: return a.text == b.text;
        case SurfaceTerm::Kind::Blank: return true;
        case SurfaceTerm::Kind::Composite:
        case SurfaceTerm::Kind::List: {
            if (a.kids.size() != b.kids.size() || a.list_has_tail != b.list_has_tail) return false;
            for (size_t i = 0; i < a.kids.size(); ++i)
                if (!surface_equal(a.kids[i], b.kids[i])) return false;
            return true;
        }
    }
    return false;
}

namespace {

bool terms_equal(const std::vector<SurfaceTerm>& a, const std::vector<SurfaceTerm>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!surface_equal(a[i], b[i])) return false;
    return true;
}

bool relation_equal(const SurfaceRelation& a, const SurfaceRelation& b) {
    return a.form == b.form && terms_equal(a.lhs, b.lhs) && terms_equal(a.infix, b.infix) && terms_equal(a.rhs, b.rhs);
}

bool party_equal(const SurfaceParty& a, const SurfaceParty& b) {
    if (a.context.has_value() != b.context.has_value()) return false;
    if (a.context && !surface_equal(*a.context, *b.context)) return false;
    return terms_equal(a.body, b.body);
}

bool statement_equal(const SurfaceStatement& a, const SurfaceStatement& b);

bool declaration_equal(const SurfaceDeclaration& a, const SurfaceDeclaration& b) {
    if (a.kind != b.kind || a.cost != b.cost || a.halting != b.halting) return false;
    switch (a.kind) {
        case SurfaceDeclaration::Kind::SubRelation: return relation_equal(a.rel, b.rel);
        case SurfaceDeclaration::Kind::SubParty: return party_equal(a.party, b.party);
        case SurfaceDeclaration::Kind::Nested: return statement_equal(*a.nested, *b.nested);
    }
    return false;
}

bool statement_equal(const SurfaceStatement& a, const SurfaceStatement& b) {
    if (a.kind != b.kind || a.suppress_ambiguity != b.suppress_ambiguity) return false;
    switch (a.kind) {
        case SurfaceStatement::Kind::HaltingDecl: return terms_equal(a.halting, b.halting);
        case SurfaceStatement::Kind::HaltingRel: return relation_equal(a.halting_rel, b.halting_rel);
        case SurfaceStatement::Kind::Data: return terms_equal(a.data, b.data);
        case SurfaceStatement::Kind::Import: return a.import_path == b.import_path;
        case SurfaceStatement::Kind::Rule: {
            if (a.head.is_bag != b.head.is_bag) return false;
            if (a.head.is_bag) {
                if (a.head.lhs_bag.size() != b.head.lhs_bag.size() || a.head.rhs_bag.size() != b.head.rhs_bag.size())
                    return false;
                for (size_t i = 0; i < a.head.lhs_bag.size(); ++i)
                    if (!party_equal(a.head.lhs_bag[i], b.head.lhs_bag[i])) return false;
                for (size_t i = 0; i < a.head.rhs_bag.size(); ++i)
                    if (!party_equal(a.head.rhs_bag[i], b.head.rhs_bag[i])) return false;
            } else if (!relation_equal(a.head.rel, b.head.rel)) {
                return false;
            }
            if (a.decls.size() != b.decls.size()) return false;
            for (size_t i = 0; i < a.decls.size(); ++i)
                if (!declaration_equal(a.decls[i], b.decls[i])) return false;
            return true;
        }
    }
    return false;
}

}  // namespace

bool surface_equal(const std::vector<SurfaceStatement>& a, const std::vector<SurfaceStatement>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!statement_equal(a[i], b[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// REPL lines

ReplCommand parse_repl_line(const std::string& line) {
    ReplCommand cmd;
    size_t start = 0;
    while (start < line.size() && is_space(line[start])) ++start;
    if (start == line.size()) return cmd;
    Span sp{"", 1, static_cast<int>(start) + 1};

    if (line[start] == ':') {
        // Directives take raw whitespace-separated arguments; file paths
        // contain '.' which the tokenizer would split.
        std::vector<std::string> words;
        std::string w;
        for (size_t i = start + 1; i <= line.size(); ++i) {
            if (i == line.size() || is_space(line[i])) {
                if (!w.empty()) words.push_back(std::move(w));
                w.clear();
            } else {
                w += line[i];
            }
        }
        if (words.empty()) throw SyntaxError(sp, "expected directive letter after ':'");
        const std::string& d = words[0];
        if (d == "q") cmd.kind = ReplCommand::Kind::Quit;
        else if (d == "r") cmd.kind = ReplCommand::Kind::Reload;
        else if (d == "v") cmd.kind = ReplCommand::Kind::Vars;
        else if (d == "p") cmd.kind = ReplCommand::Kind::Rules;
        else if (d == "g") cmd.kind = ReplCommand::Kind::Garbage;
        else if (d == "l") {
            cmd.kind = ReplCommand::Kind::Load;
            cmd.files.assign(words.begin() + 1, words.end());
            if (cmd.files.empty()) throw SyntaxError(sp, ":l needs at least one file");
            return cmd;
        } else {
            throw SyntaxError(sp, "unknown directive :" + d);
        }
        if (words.size() > 1) throw SyntaxError(sp, "unexpected input after directive :" + d);
        return cmd;
    }

    char c0 = line[start];
    if (c0 == '|' || c0 == '>' || c0 == '<') {
        std::vector<Token> toks = tokenize(line.substr(start + 1), "");
        Parser p(std::move(toks), /*dash_is_blank=*/true);
        if (c0 == '|') {
            cmd.kind = ReplCommand::Kind::Evaluate;
            cmd.term = p.terms_to_end();
            if (cmd.term.empty()) throw SyntaxError(sp, "'|' needs a term to evaluate");
        } else {
            cmd.kind = ReplCommand::Kind::Relation;
            cmd.backward = c0 == '<';
            cmd.rel = p.relation_to_end(true);
            if (cmd.rel.form != SurfaceRelation::Form::Infix)
                throw SyntaxError(sp, "expected `f` relation query");
        }
        return cmd;
    }

    Parser p(tokenize(line, ""));
    cmd.kind = ReplCommand::Kind::Statement;
    cmd.stmt = std::make_shared<SurfaceStatement>(p.single_statement());
    return cmd;
}

}  // namespace alethe
