#include "relq/dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <unordered_set>

#include "relq/errors.hpp"

namespace relq {

namespace {

struct Token {
    enum class Type { Ident, Number, Punct, End };
    Type type = Type::End;
    std::string text;
    double num = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        skip_space_and_comments();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.type = Token::Type::End;
            tok_.text = "<end of input>";
            return;
        }
        const char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            tok_.type = Token::Type::Ident;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                tok_.text += take();
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            return;
        }
        if (std::string("();,=[]|:&^-").find(c) != std::string::npos) {
            tok_.type = Token::Type::Punct;
            tok_.text = take();
            return;
        }
        throw ParseError(line_, col_, "unexpected character", std::string(1, c));
    }

    void lex_number() {
        tok_.type = Token::Type::Number;
        const int l = line_, cpos = col_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            tok_.text += take();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            tok_.text += take();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                tok_.text += take();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            tok_.text += take();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                tok_.text += take();
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw ParseError(l, cpos, "malformed number literal", tok_.text);
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                tok_.text += take();
        }
        if (pos_ < src_.size() &&
            (src_[pos_] == '.' || std::isalnum(static_cast<unsigned char>(src_[pos_]))))
            throw ParseError(l, cpos, "malformed number literal", tok_.text);
        char* end = nullptr;
        tok_.num = std::strtod(tok_.text.c_str(), &end);
        if (end != tok_.text.c_str() + tok_.text.size())
            throw ParseError(l, cpos, "malformed number literal", tok_.text);
    }

    char take() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space_and_comments() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') take();
            } else if (c == '\r') {
                // normalize CRLF / lone CR to a line break
                ++pos_;
                if (pos_ < src_.size() && src_[pos_] == '\n') {
                    take();
                } else {
                    ++line_;
                    col_ = 1;
                }
            } else if (c == ' ' || c == '\t' || c == '\n') {
                take();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

struct FamilySpec {
    CoeffFamily no_sep;   // valid only for P/O
    CoeffFamily pipe_sep;
    CoeffFamily colon_sep;
    RangeType range;
    bool allows_no_sep;
    bool allows_colon;
};

std::optional<FamilySpec> family_spec(const std::string& name) {
    using F = CoeffFamily;
    if (name == "P")
        return FamilySpec{F::P, F::CondP, F::P, RangeType::P, true, false};
    if (name == "O")
        return FamilySpec{F::O, F::CondO, F::O, RangeType::O, true, false};
    if (name == "Q")
        return FamilySpec{F::QOdds, F::QOdds, F::QProb, RangeType::O, false, true};
    if (name == "F")
        return FamilySpec{F::FOdds, F::FOdds, F::FProb, RangeType::O, false, true};
    if (name == "QS")
        return FamilySpec{F::QOdds, F::QOdds, F::QProb, RangeType::S, false, true};
    if (name == "FS")
        return FamilySpec{F::FOdds, F::FOdds, F::FProb, RangeType::S, false, true};
    return std::nullopt;
}

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    Program run() {
        std::optional<EventTable> events;
        std::vector<Declaration> decls;
        std::vector<Query> queries;

        for (;;) {
            const Token t = lex_.peek();
            if (t.type == Token::Type::End) break;
            if (t.type != Token::Type::Ident)
                throw ParseError(t.line, t.col, "expected a statement keyword", t.text);

            if (t.text == "events") {
                lex_.next();
                if (events)
                    throw ParseError(t.line, t.col, "duplicate events statement", t.text);
                events = parse_events();
            } else if (t.text == "define") {
                lex_.next();
                require_events(events, t);
                decls.push_back(parse_define(*events));
            } else if (t.text == "assert") {
                lex_.next();
                require_events(events, t);
                decls.push_back(parse_assert(*events));
            } else if (t.text == "exchangeable") {
                lex_.next();
                require_events(events, t);
                decls.push_back(parse_exchangeable(*events));
            } else if (t.text == "query") {
                lex_.next();
                require_events(events, t);
                queries.push_back(parse_query(*events));
            } else {
                throw ParseError(t.line, t.col, "unknown statement keyword", t.text);
            }
        }
        if (!events)
            throw ParseError(1, 1, "program has no events statement", "");
        return Program{*events, std::move(decls), std::move(queries)};
    }

private:
    Lexer lex_;

    static void require_events(const std::optional<EventTable>& events, const Token& t) {
        if (!events)
            throw ParseError(t.line, t.col, "events must be declared before use", t.text);
    }

    Token expect_punct(const std::string& p) {
        const Token t = lex_.peek();
        if (t.type != Token::Type::Punct || t.text != p)
            throw ParseError(t.line, t.col, "expected '" + p + "'", t.text);
        return lex_.next();
    }

    Token expect_ident(const std::string& what) {
        const Token t = lex_.peek();
        if (t.type != Token::Type::Ident)
            throw ParseError(t.line, t.col, "expected " + what, t.text);
        return lex_.next();
    }

    bool peek_punct(const std::string& p) const {
        const Token& t = lex_.peek();
        return t.type == Token::Type::Punct && t.text == p;
    }

    std::vector<Token> parse_namelist() {
        std::vector<Token> names;
        names.push_back(expect_ident("an event name"));
        while (peek_punct(",")) {
            lex_.next();
            names.push_back(expect_ident("an event name"));
        }
        return names;
    }

    EventTable parse_events() {
        const std::vector<Token> names = parse_namelist();
        expect_punct(";");
        std::unordered_set<std::string> seen;
        std::vector<std::string> list;
        for (const auto& n : names) {
            if (!seen.insert(n.text).second)
                throw ParseError(n.line, n.col, "duplicate event name", n.text);
            list.push_back(n.text);
        }
        if (list.size() > EventTable::kMaxEvents) {
            const Token& over = names[EventTable::kMaxEvents];
            throw ParseError(over.line, over.col, "too many events (max 16)", over.text);
        }
        return EventTable(list);
    }

    // expression grammar: or > xor > and > unary; "|" is never consumed here
    BoolExpr parse_expr(const EventTable& events, const std::string* self_name) {
        return parse_or(events, self_name);
    }

    BoolExpr parse_or(const EventTable& events, const std::string* self) {
        BoolExpr e = parse_xor(events, self);
        while (lex_.peek().type == Token::Type::Ident && lex_.peek().text == "or") {
            lex_.next();
            e = e | parse_xor(events, self);
        }
        return e;
    }

    BoolExpr parse_xor(const EventTable& events, const std::string* self) {
        BoolExpr e = parse_and(events, self);
        while (peek_punct("^")) {
            lex_.next();
            e = e ^ parse_and(events, self);
        }
        return e;
    }

    BoolExpr parse_and(const EventTable& events, const std::string* self) {
        BoolExpr e = parse_unary(events, self);
        while (peek_punct("&")) {
            lex_.next();
            e = e & parse_unary(events, self);
        }
        return e;
    }

    BoolExpr parse_unary(const EventTable& events, const std::string* self) {
        if (peek_punct("-")) {
            lex_.next();
            return !parse_unary(events, self);
        }
        const Token t = lex_.peek();
        if (peek_punct("(")) {
            lex_.next();
            BoolExpr e = parse_or(events, self);
            expect_punct(")");
            return e;
        }
        if (t.type != Token::Type::Ident)
            throw ParseError(t.line, t.col, "expected an event name or TRUE/FALSE", t.text);
        lex_.next();
        if (t.text == "TRUE") return BoolExpr::always();
        if (t.text == "FALSE") return BoolExpr::never();
        if (!events.contains(t.text))
            throw ParseError(t.line, t.col, "unknown event", t.text);
        if (self && t.text == *self)
            throw ParseError(t.line, t.col, "self-referential definition", t.text);
        return BoolExpr::event(t.text);
    }

    Declaration parse_define(const EventTable& events) {
        const Token name = expect_ident("an event name");
        if (!events.contains(name.text))
            throw ParseError(name.line, name.col, "unknown event", name.text);
        expect_punct("=");
        BoolExpr e = parse_expr(events, &name.text);
        expect_punct(";");
        return BoolDefine{name.text, std::move(e)};
    }

    Declaration parse_exchangeable(const EventTable& events) {
        const std::vector<Token> names = parse_namelist();
        expect_punct(";");
        std::unordered_set<std::string> seen;
        std::vector<std::string> list;
        for (const auto& n : names) {
            if (!events.contains(n.text))
                throw ParseError(n.line, n.col, "unknown event", n.text);
            if (!seen.insert(n.text).second)
                throw ParseError(n.line, n.col, "duplicate event in exchangeable block", n.text);
            list.push_back(n.text);
        }
        if (list.size() < 2)
            throw ParseError(names[0].line, names[0].col,
                             "exchangeable block needs at least 2 events", names[0].text);
        return ExchBlock{std::move(list)};
    }

    struct ParsedCoeff {
        CoeffFamily family;
        BoolExpr a;
        std::optional<BoolExpr> b;
        RangeType range;
    };

    ParsedCoeff parse_coeff(const EventTable& events) {
        const Token fam = expect_ident("a coefficient family (P, O, Q, F, QS, FS)");
        const auto spec = family_spec(fam.text);
        if (!spec)
            throw ParseError(fam.line, fam.col, "unknown coefficient family", fam.text);
        expect_punct("(");
        BoolExpr a = parse_expr(events, nullptr);
        std::optional<BoolExpr> b;
        CoeffFamily family;
        if (peek_punct("|") || peek_punct(":")) {
            const Token sep = lex_.next();
            if (sep.text == ":" && !spec->allows_colon)
                throw ParseError(sep.line, sep.col,
                                 "':' is not valid for " + fam.text + " coefficients",
                                 sep.text);
            b = parse_expr(events, nullptr);
            family = (sep.text == "|") ? spec->pipe_sep : spec->colon_sep;
        } else {
            if (!spec->allows_no_sep) {
                const Token& t = lex_.peek();
                throw ParseError(t.line, t.col,
                                 fam.text + " requires a '|' or ':' separator", t.text);
            }
            family = spec->no_sep;
        }
        expect_punct(")");
        return ParsedCoeff{family, std::move(a), std::move(b), spec->range};
    }

    // [-] NUMBER, or "inf" when allowed (O-range interval upper bounds)
    double parse_value(RangeType range, bool inf_ok, const char* role) {
        Token sign = lex_.peek();
        double mult = 1.0;
        if (sign.type == Token::Type::Punct && sign.text == "-") {
            lex_.next();
            mult = -1.0;
        }
        const Token t = lex_.peek();
        if (t.type == Token::Type::Ident && t.text == "inf") {
            lex_.next();
            if (mult < 0 || !inf_ok || range != RangeType::O)
                throw ParseError(t.line, t.col,
                                 "'inf' is only valid as an odds-range interval upper bound",
                                 t.text);
            return std::numeric_limits<double>::infinity();
        }
        if (t.type != Token::Type::Number)
            throw ParseError(t.line, t.col, std::string("expected a number for the ") + role,
                             t.text);
        lex_.next();
        const Token at = (mult < 0) ? sign : t;
        check_range(mult * t.num, at, range);
        return mult * t.num;
    }

    static void check_range(double v, const Token& t, RangeType range) {
        const bool ok = (range == RangeType::P)   ? (v >= 0.0 && v <= 1.0)
                        : (range == RangeType::O) ? (v >= 0.0)
                                                  : (v >= -1.0 && v <= 1.0);
        if (!ok)
            throw ParseError(t.line, t.col,
                             "value outside the " + to_string(range) + " range", t.text);
    }

    Declaration parse_assert(const EventTable& events) {
        ParsedCoeff c = parse_coeff(events);
        const Token rel = lex_.peek();
        CoeffAssert out{c.family, std::move(c.a), std::move(c.b), c.range, 0, 0, false};
        if (peek_punct("=")) {
            lex_.next();
            out.lo = out.hi = parse_value(c.range, false, "asserted value");
        } else if (rel.type == Token::Type::Ident && rel.text == "in") {
            lex_.next();
            expect_punct("[");
            const Token lo_tok = lex_.peek();
            out.lo = parse_value(c.range, false, "interval lower bound");
            expect_punct(",");
            out.hi = parse_value(c.range, true, "interval upper bound");
            expect_punct("]");
            out.is_interval = true;
            if (out.lo > out.hi)
                throw ParseError(lo_tok.line, lo_tok.col,
                                 "interval lower bound exceeds upper bound", lo_tok.text);
        } else {
            throw ParseError(rel.line, rel.col, "expected '=' or 'in'", rel.text);
        }
        expect_punct(";");
        return out;
    }

    Query parse_query(const EventTable& events) {
        ParsedCoeff c = parse_coeff(events);
        expect_punct(";");
        return Query{c.family, std::move(c.a), std::move(c.b), c.range};
    }
};

std::string fmt_num(double v) {
    if (std::isinf(v)) return "inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

Program parse(std::string_view source) {
    Parser p(source);
    return p.run();
}

std::string pretty_print(const Program& p) {
    std::string out = "events ";
    const auto& names = p.events.names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    out += ";\n";
    for (const auto& d : p.declarations) {
        if (const auto* ca = std::get_if<CoeffAssert>(&d)) {
            out += "assert " + Coefficient{ca->family, ca->a, ca->b, ca->range,
                                           ExtReal::of(0)}.label();
            if (ca->is_interval)
                out += " in [" + fmt_num(ca->lo) + ", " + fmt_num(ca->hi) + "]";
            else
                out += " = " + fmt_num(ca->lo);
            out += ";\n";
        } else if (const auto* bd = std::get_if<BoolDefine>(&d)) {
            out += "define " + bd->event + " = " + bd->expr.to_string() + ";\n";
        } else {
            out += std::get<ExchBlock>(d).label() + ";\n";
        }
    }
    for (const auto& q : p.queries) out += "query " + q.label() + ";\n";
    return out;
}

namespace {

bool same_expr_opt(const std::optional<BoolExpr>& a, const std::optional<BoolExpr>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || a->same_as(*b);
}

bool same_decl(const Declaration& x, const Declaration& y) {
    if (x.index() != y.index()) return false;
    if (const auto* a = std::get_if<CoeffAssert>(&x)) {
        const auto& b = std::get<CoeffAssert>(y);
        return a->family == b.family && a->range == b.range && a->lo == b.lo &&
               a->hi == b.hi && a->is_interval == b.is_interval && a->a.same_as(b.a) &&
               same_expr_opt(a->b, b.b);
    }
    if (const auto* a = std::get_if<BoolDefine>(&x)) {
        const auto& b = std::get<BoolDefine>(y);
        return a->event == b.event && a->expr.same_as(b.expr);
    }
    return std::get<ExchBlock>(x).events == std::get<ExchBlock>(y).events;
}

} // namespace

bool same_program(const Program& a, const Program& b) {
    if (!(a.events == b.events)) return false;
    if (a.declarations.size() != b.declarations.size()) return false;
    for (std::size_t i = 0; i < a.declarations.size(); ++i)
        if (!same_decl(a.declarations[i], b.declarations[i])) return false;
    if (a.queries.size() != b.queries.size()) return false;
    for (std::size_t i = 0; i < a.queries.size(); ++i) {
        const auto& x = a.queries[i];
        const auto& y = b.queries[i];
        if (x.family != y.family || x.range != y.range || !x.a.same_as(y.a) ||
            !same_expr_opt(x.b, y.b))
            return false;
    }
    return true;
}

} // namespace relq
