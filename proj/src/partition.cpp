#include "relq/partition.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace relq {

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin() + 1, s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

EventTable::EventTable(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty())
        throw DomainError("event table needs at least one event");
    if (names_.size() > kMaxEvents)
        throw DomainError("event table supports at most 16 events, got " +
                          std::to_string(names_.size()));
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!is_identifier(n))
            throw DomainError("bad event name '" + n + "'");
        if (!seen.insert(n).second)
            throw DomainError("duplicate event name '" + n + "'");
    }
}

std::optional<std::size_t> EventTable::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// BoolExpr

BoolExpr BoolExpr::always() {
    return BoolExpr(std::make_shared<Node>(Node{Kind::True, {}, nullptr, nullptr}));
}

BoolExpr BoolExpr::never() {
    return BoolExpr(std::make_shared<Node>(Node{Kind::False, {}, nullptr, nullptr}));
}

BoolExpr BoolExpr::event(std::string name) {
    return BoolExpr(std::make_shared<Node>(Node{Kind::Event, std::move(name), nullptr, nullptr}));
}

BoolExpr BoolExpr::binary(Kind k, const BoolExpr& a, const BoolExpr& b) {
    return BoolExpr(std::make_shared<Node>(Node{k, {}, a.node_, b.node_}));
}

BoolExpr operator!(const BoolExpr& e) {
    return BoolExpr(std::make_shared<BoolExpr::Node>(
        BoolExpr::Node{BoolExpr::Kind::Not, {}, e.node_, nullptr}));
}

BoolExpr operator&(const BoolExpr& a, const BoolExpr& b) {
    return BoolExpr::binary(BoolExpr::Kind::And, a, b);
}

BoolExpr operator|(const BoolExpr& a, const BoolExpr& b) {
    return BoolExpr::binary(BoolExpr::Kind::Or, a, b);
}

BoolExpr operator^(const BoolExpr& a, const BoolExpr& b) {
    return BoolExpr::binary(BoolExpr::Kind::Xor, a, b);
}

bool BoolExpr::same_as(const BoolExpr& other) const {
    const Node* x = node_.get();
    const Node* y = other.node_.get();
    if (x == y) return true;
    if (!x || !y) return false;
    if (x->kind != y->kind || x->name != y->name) return false;
    if (!BoolExpr(x->lhs).same_as(BoolExpr(y->lhs))) return false;
    return BoolExpr(x->rhs).same_as(BoolExpr(y->rhs));
}

bool BoolExpr::mentions(const std::string& name) const {
    if (!node_) return false;
    switch (node_->kind) {
        case Kind::Event: return node_->name == name;
        case Kind::True:
        case Kind::False: return false;
        case Kind::Not: return lhs().mentions(name);
        default: return lhs().mentions(name) || rhs().mentions(name);
    }
}

bool BoolExpr::eval(const EventTable& table, std::size_t atom) const {
    switch (node_->kind) {
        case Kind::True: return true;
        case Kind::False: return false;
        case Kind::Event: {
            auto idx = table.index_of(node_->name);
            if (!idx)
                throw NameError("unknown event '" + node_->name + "'");
            return table.event_true_at(*idx, atom);
        }
        case Kind::Not: return !lhs().eval(table, atom);
        case Kind::And: return lhs().eval(table, atom) && rhs().eval(table, atom);
        case Kind::Or: return lhs().eval(table, atom) || rhs().eval(table, atom);
        case Kind::Xor: return lhs().eval(table, atom) != rhs().eval(table, atom);
    }
    return false;
}

namespace {

// Precedence for printing: higher binds tighter.
int precedence(BoolExpr::Kind k) {
    switch (k) {
        case BoolExpr::Kind::Not: return 4;
        case BoolExpr::Kind::And: return 3;
        case BoolExpr::Kind::Xor: return 2;
        case BoolExpr::Kind::Or: return 1;
        default: return 5; // leaves
    }
}

void render(const BoolExpr& e, int parent_prec, std::string& out) {
    using Kind = BoolExpr::Kind;
    const int prec = precedence(e.kind());
    const bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (e.kind()) {
        case Kind::True: out += "TRUE"; break;
        case Kind::False: out += "FALSE"; break;
        case Kind::Event: out += e.event_name(); break;
        case Kind::Not:
            out += '-';
            render(e.lhs(), precedence(Kind::Not), out);
            break;
        case Kind::And:
            render(e.lhs(), prec, out);
            out += " & ";
            render(e.rhs(), prec + 1, out);
            break;
        case Kind::Xor:
            render(e.lhs(), prec, out);
            out += " ^ ";
            render(e.rhs(), prec + 1, out);
            break;
        case Kind::Or:
            render(e.lhs(), prec, out);
            out += " or ";
            render(e.rhs(), prec + 1, out);
            break;
    }
    if (parens) out += ')';
}

} // namespace

std::string BoolExpr::to_string() const {
    std::string out;
    render(*this, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// AtomMask

AtomMask::AtomMask(std::size_t bit_count)
    : bits_(bit_count), words_((bit_count + 63) / 64, 0) {}

bool AtomMask::test(std::size_t atom) const {
    return (words_[atom / 64] >> (atom % 64)) & 1u;
}

void AtomMask::set(std::size_t atom) {
    words_[atom / 64] |= std::uint64_t{1} << (atom % 64);
}

std::size_t AtomMask::count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

std::vector<std::size_t> AtomMask::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < bits_; ++a)
        if (test(a)) out.push_back(a);
    return out;
}

void AtomMask::check_same(const AtomMask& o) const {
    if (bits_ != o.bits_)
        throw DimensionError("atom mask length mismatch: " + std::to_string(bits_) +
                             " vs " + std::to_string(o.bits_));
}

AtomMask AtomMask::operator&(const AtomMask& o) const {
    check_same(o);
    AtomMask r(bits_);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = words_[i] & o.words_[i];
    return r;
}

AtomMask AtomMask::operator|(const AtomMask& o) const {
    check_same(o);
    AtomMask r(bits_);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = words_[i] | o.words_[i];
    return r;
}

AtomMask AtomMask::operator^(const AtomMask& o) const {
    check_same(o);
    AtomMask r(bits_);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = words_[i] ^ o.words_[i];
    return r;
}

AtomMask AtomMask::operator~() const {
    AtomMask r(bits_);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = ~words_[i];
    // clear padding beyond bit_count
    if (bits_ % 64 != 0)
        r.words_.back() &= (std::uint64_t{1} << (bits_ % 64)) - 1;
    return r;
}

bool AtomMask::operator==(const AtomMask& o) const {
    return bits_ == o.bits_ && words_ == o.words_;
}

AtomMask AtomMask::all(std::size_t bit_count) {
    return ~AtomMask(bit_count);
}

// ---------------------------------------------------------------------------
// Distribution

Distribution::Distribution(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty())
        throw DomainError("distribution must have at least one atom");
    double sum = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0))
            throw DomainError("distribution entry " + std::to_string(v) +
                              " violates nonnegativity");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw DomainError("distribution sums to " + std::to_string(sum) +
                          ", outside 1 +/- 1e-9");
    for (double& v : p_) v /= sum;
}

Distribution Distribution::uniform(std::size_t atom_count) {
    return Distribution(std::vector<double>(atom_count, 1.0 / double(atom_count)));
}

AtomMask atoms_of(const BoolExpr& expr, const EventTable& table) {
    using Kind = BoolExpr::Kind;
    const std::size_t atoms = table.atom_count();
    switch (expr.kind()) {
        case Kind::True: return AtomMask::all(atoms);
        case Kind::False: return AtomMask::none(atoms);
        case Kind::Event: {
            auto idx = table.index_of(expr.event_name());
            if (!idx)
                throw NameError("unknown event '" + expr.event_name() + "'");
            AtomMask m(atoms);
            for (std::size_t a = 0; a < atoms; ++a)
                if (table.event_true_at(*idx, a)) m.set(a);
            return m;
        }
        case Kind::Not: return ~atoms_of(expr.lhs(), table);
        case Kind::And: return atoms_of(expr.lhs(), table) & atoms_of(expr.rhs(), table);
        case Kind::Or: return atoms_of(expr.lhs(), table) | atoms_of(expr.rhs(), table);
        case Kind::Xor: return atoms_of(expr.lhs(), table) ^ atoms_of(expr.rhs(), table);
    }
    throw Error("unreachable: bad expression kind");
}

double prob(const Distribution& dist, const AtomMask& mask) {
    if (dist.size() != mask.bit_count())
        throw DimensionError("distribution has " + std::to_string(dist.size()) +
                             " atoms, mask has " + std::to_string(mask.bit_count()));
    double s = 0.0;
    for (std::size_t a = 0; a < dist.size(); ++a)
        if (mask.test(a)) s += dist[a];
    return s;
}

Distribution dist_from_2x2(double x, double y, double z, double w) {
    for (double v : {x, y, z, w})
        if (!(v >= 0.0))
            throw DomainError("2x2 entry " + std::to_string(v) + " violates nonnegativity");
    const double sum = x + y + z + w;
    if (std::abs(sum - 1.0) > Distribution::kSumTolerance)
        throw DomainError("2x2 table sums to " + std::to_string(sum) +
                          ", outside 1 +/- 1e-9");
    // atom order: 0b00=w, 0b01=z, 0b10=y, 0b11=x
    return Distribution({w, z, y, x});
}

} // namespace relq
