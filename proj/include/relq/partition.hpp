#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relq/errors.hpp"

namespace relq {

/// Ordered registry of named binary events.  The n events span a product
/// partition of 2^n atoms.  Atom indices encode truth assignments: event i
/// (in table order) is true at atom a iff bit (n-1-i) of a is set, i.e. the
/// index reads as the binary string of truth values with event 0 leftmost.
/// For events [A, B]: atom 0b11 = A&B, 0b10 = A&-B, 0b01 = -A&B, 0b00 = -A&-B.
class EventTable {
public:
    static constexpr std::size_t kMaxEvents = 16;

    explicit EventTable(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    std::size_t atom_count() const { return std::size_t{1} << names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_[i]; }

    std::optional<std::size_t> index_of(const std::string& name) const;
    bool contains(const std::string& name) const { return index_of(name).has_value(); }

    /// True iff event i holds at atom `atom`.
    bool event_true_at(std::size_t event_index, std::size_t atom) const {
        return (atom >> (names_.size() - 1 - event_index)) & 1u;
    }

    bool operator==(const EventTable& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
};

/// Is `s` a legal event identifier: [A-Za-z_][A-Za-z0-9_]* ?
bool is_identifier(const std::string& s);

/// Immutable boolean expression tree over event names, with operators
/// NOT, AND, OR, XOR and literals TRUE/FALSE.  Value-semantic handle;
/// sharing subtrees is safe.
class BoolExpr {
public:
    enum class Kind { True, False, Event, Not, And, Or, Xor };

    struct Node {
        Kind kind;
        std::string name;                    // Event leaves only
        std::shared_ptr<const Node> lhs, rhs;
    };

    BoolExpr() : node_(nullptr) {}

    static BoolExpr always();
    static BoolExpr never();
    static BoolExpr event(std::string name);

    Kind kind() const { return node_->kind; }
    const std::string& event_name() const { return node_->name; }
    BoolExpr lhs() const { return BoolExpr(node_->lhs); }
    BoolExpr rhs() const { return BoolExpr(node_->rhs); }
    bool valid() const { return node_ != nullptr; }

    /// Structural equality (same shape, same names).
    bool same_as(const BoolExpr& other) const;

    /// True iff some Event leaf has the given name.
    bool mentions(const std::string& name) const;

    /// Evaluate under a truth assignment (used as the brute-force reference;
    /// assignment(i) gives the truth value of event i).
    bool eval(const EventTable& table, std::size_t atom) const;

    /// Render with minimal parentheses: "-", "&", "or", "^".
    std::string to_string() const;

    friend BoolExpr operator!(const BoolExpr& e);
    friend BoolExpr operator&(const BoolExpr& a, const BoolExpr& b);
    friend BoolExpr operator|(const BoolExpr& a, const BoolExpr& b);
    friend BoolExpr operator^(const BoolExpr& a, const BoolExpr& b);

private:
    explicit BoolExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    static BoolExpr binary(Kind k, const BoolExpr& a, const BoolExpr& b);

    std::shared_ptr<const Node> node_;
};

/// Bitset over the 2^n atoms of a product partition; bit a set means the
/// represented expression is true at atom a.
class AtomMask {
public:
    AtomMask() : bits_(0) {}
    explicit AtomMask(std::size_t bit_count);

    std::size_t bit_count() const { return bits_; }
    bool test(std::size_t atom) const;
    void set(std::size_t atom);
    std::size_t count() const;

    /// Indices of set bits, ascending (test convenience).
    std::vector<std::size_t> indices() const;

    AtomMask operator&(const AtomMask& o) const;
    AtomMask operator|(const AtomMask& o) const;
    AtomMask operator^(const AtomMask& o) const;
    AtomMask operator~() const;
    bool operator==(const AtomMask& o) const;

    static AtomMask all(std::size_t bit_count);
    static AtomMask none(std::size_t bit_count) { return AtomMask(bit_count); }

private:
    void check_same(const AtomMask& o) const;

    std::size_t bits_;
    std::vector<std::uint64_t> words_;
};

/// Probability distribution over the 2^n atoms: entries >= 0, sum 1 within
/// 1e-9 on input, renormalized exactly on construction.
class Distribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    explicit Distribution(std::vector<double> p);
    static Distribution uniform(std::size_t atom_count);

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t a) const { return p_[a]; }
    const std::vector<double>& values() const { return p_; }

private:
    std::vector<double> p_;
};

/// Evaluate an expression to the set of atoms where it holds.
/// Throws NameError if a leaf does not resolve in the table.
AtomMask atoms_of(const BoolExpr& expr, const EventTable& table);

/// Probability of a mask under a distribution: sum of entries at set bits.
double prob(const Distribution& dist, const AtomMask& mask);

/// Build the 4-atom distribution over events [A, B] from the 2x2 table
/// P(A&B)=x, P(A&-B)=y, P(-A&B)=z, P(-A&-B)=w.
Distribution dist_from_2x2(double x, double y, double z, double w);

} // namespace relq
