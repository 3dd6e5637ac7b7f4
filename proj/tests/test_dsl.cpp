#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relq/dsl.hpp"

using namespace relq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> files_in(const char* dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(fs::path(RELQ_GOLDEN_DIR) / dir))
        if (e.path().extension() == ".rel") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

struct Expectation {
    int line, col;
    std::string fragment;
};

Expectation expectation_of(const std::string& text) {
    const auto pos = text.find("# expect ");
    REQUIRE(pos != std::string::npos);
    std::istringstream ss(text.substr(pos + 9));
    Expectation e;
    ss >> e.line >> e.col;
    std::getline(ss, e.fragment);
    // trim the leading space
    if (!e.fragment.empty() && e.fragment[0] == ' ') e.fragment.erase(0, 1);
    if (!e.fragment.empty() && e.fragment.back() == '\r') e.fragment.pop_back();
    return e;
}

} // namespace

TEST_CASE("golden corpus: every program round-trips through the pretty printer") {
    const auto files = files_in("ok");
    CHECK(files.size() >= 15);
    for (const auto& f : files) {
        INFO("file: " << f.string());
        const Program p1 = parse(slurp(f));
        const std::string printed = pretty_print(p1);
        const Program p2 = parse(printed);
        CHECK(same_program(p1, p2));
        CHECK(pretty_print(p2) == printed); // printing is a fixed point
    }
}

TEST_CASE("golden corpus: error files fail at the recorded positions") {
    const auto files = files_in("err");
    CHECK(files.size() >= 8);
    for (const auto& f : files) {
        INFO("file: " << f.string());
        const std::string text = slurp(f);
        const Expectation want = expectation_of(text);
        try {
            parse(text);
            FAIL("expected a parse error in " << f.string());
        } catch (const ParseError& e) {
            CHECK(e.line == want.line);
            CHECK(e.col == want.col);
            CHECK(std::string(e.what()).find(want.fragment) != std::string::npos);
        }
    }
}

TEST_CASE("the likelihood-ratio program parses into the expected shape") {
    const Program p =
        parse("events T, A; assert P(T|A) = 0.003; assert P(T|-A) = 0.001; query Q(T:A);");
    CHECK(p.events.names() == std::vector<std::string>{"T", "A"});
    REQUIRE(p.declarations.size() == 2);
    REQUIRE(p.queries.size() == 1);
    const auto& a0 = std::get<CoeffAssert>(p.declarations[0]);
    CHECK(a0.family == CoeffFamily::CondP);
    CHECK(a0.lo == 0.003);
    CHECK_FALSE(a0.is_interval);
    const auto& a1 = std::get<CoeffAssert>(p.declarations[1]);
    CHECK(a1.b->kind() == BoolExpr::Kind::Not);
    CHECK(p.queries[0].family == CoeffFamily::QProb);
    CHECK(p.queries[0].range == RangeType::O);
}

TEST_CASE("family and separator mapping") {
    auto family_of = [](const std::string& text) {
        const Program p = parse("events A, B; query " + text + ";");
        return std::pair{p.queries[0].family, p.queries[0].range};
    };
    CHECK(family_of("P(A)") == std::pair{CoeffFamily::P, RangeType::P});
    CHECK(family_of("P(A|B)") == std::pair{CoeffFamily::CondP, RangeType::P});
    CHECK(family_of("O(A)") == std::pair{CoeffFamily::O, RangeType::O});
    CHECK(family_of("O(A|B)") == std::pair{CoeffFamily::CondO, RangeType::O});
    CHECK(family_of("Q(A|B)") == std::pair{CoeffFamily::QOdds, RangeType::O});
    CHECK(family_of("Q(A:B)") == std::pair{CoeffFamily::QProb, RangeType::O});
    CHECK(family_of("F(A|B)") == std::pair{CoeffFamily::FOdds, RangeType::O});
    CHECK(family_of("F(A:B)") == std::pair{CoeffFamily::FProb, RangeType::O});
    CHECK(family_of("QS(A|B)") == std::pair{CoeffFamily::QOdds, RangeType::S});
    CHECK(family_of("QS(A:B)") == std::pair{CoeffFamily::QProb, RangeType::S});
    CHECK(family_of("FS(A|B)") == std::pair{CoeffFamily::FOdds, RangeType::S});
    CHECK(family_of("FS(A:B)") == std::pair{CoeffFamily::FProb, RangeType::S});
}

TEST_CASE("the conditioning bar separates only at the argument top level") {
    const Program p = parse("events A, B, C; query P((A or B)|C);");
    CHECK(p.queries[0].a.kind() == BoolExpr::Kind::Or);
    CHECK(p.queries[0].b->event_name() == "C");

    CHECK_THROWS_AS(parse("events A, B, C; query Q(A|B|C);"), ParseError);
}

TEST_CASE("operator precedence: not over and over xor over or") {
    const Program p = parse("events A, B, C; query P(-A & B ^ C or A);");
    // ((-A & B) ^ C) or A
    const BoolExpr& e = p.queries[0].a;
    CHECK(e.kind() == BoolExpr::Kind::Or);
    CHECK(e.lhs().kind() == BoolExpr::Kind::Xor);
    CHECK(e.lhs().lhs().kind() == BoolExpr::Kind::And);
    CHECK(e.lhs().lhs().lhs().kind() == BoolExpr::Kind::Not);
    CHECK(pretty_print(p) == "events A, B, C;\nquery P(-A & B ^ C or A);\n");
}

TEST_CASE("numbers: fractions, exponents, leading dot, inf bounds") {
    const Program p = parse(
        "events A, B;\n"
        "assert P(A) = .5;\n"
        "assert O(B) in [2.5e-1, 1e2];\n"
        "assert Q(A|B) in [0.5, inf];\n");
    const auto& a0 = std::get<CoeffAssert>(p.declarations[0]);
    CHECK(a0.lo == 0.5);
    const auto& a1 = std::get<CoeffAssert>(p.declarations[1]);
    CHECK(a1.lo == 0.25);
    CHECK(a1.hi == 100.0);
    const auto& a2 = std::get<CoeffAssert>(p.declarations[2]);
    CHECK(std::isinf(a2.hi));
}

TEST_CASE("negative literals only fit the symmetric range") {
    const Program p = parse("events A, B; assert QS(A|B) in [-0.2, 0.5];");
    const auto& a = std::get<CoeffAssert>(p.declarations[0]);
    CHECK(a.lo == -0.2);
    CHECK(a.range == RangeType::S);
    CHECK_THROWS_AS(parse("events A; assert P(A) = -0.1;"), ParseError);
}

TEST_CASE("semantic errors carry positions") {
    try {
        parse("events A;\nassert P(A) = 0.3;\nquery P(A & Bogus);");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.col == 13);
        CHECK(e.token == "Bogus");
    }
}

TEST_CASE("parsing is pure: same text, same program") {
    const std::string src = slurp(fs::path(RELQ_GOLDEN_DIR) / "ok" / "syntax_compound.rel");
    CHECK(same_program(parse(src), parse(src)));
    CHECK(pretty_print(parse(src)) == pretty_print(parse(src)));
}
