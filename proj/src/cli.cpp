#include "relq/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "relq/dsl.hpp"
#include "relq/oracle.hpp"
#include "relq/solver.hpp"

namespace relq {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

std::string fmt(double v) {
    if (std::isnan(v)) return "undef";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// JSON has no infinity literal; non-finite values become strings.
json num_or_string(double v) {
    if (std::isfinite(v)) return v;
    return fmt(v);
}

json dist_json(const Distribution& d) {
    json arr = json::array();
    for (double v : d.values()) arr.push_back(v);
    return arr;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Program load_program(const std::string& path) {
    return parse(read_file(path));
}

// ---------------------------------------------------------------------- eval

Distribution table_distribution(const std::string& spec) {
    std::vector<double> vals;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        vals.push_back(std::stod(item));
    if (vals.size() != 4)
        throw DomainError("--table expects 4 comma-separated values x,y,z,w");
    return dist_from_2x2(vals[0], vals[1], vals[2], vals[3]);
}

Distribution file_distribution(const std::string& path) {
    const json j = json::parse(read_file(path));
    if (!j.is_array())
        throw DomainError("distribution file must hold a JSON array");
    std::vector<double> vals;
    for (const auto& v : j) vals.push_back(v.get<double>());
    if (vals.size() != 4)
        throw DomainError("eval expects a 4-atom distribution (events A, B)");
    return Distribution(vals);
}

int run_eval(const std::string& table, const std::string& dist_file, bool as_json) {
    const Distribution dist =
        !table.empty() ? table_distribution(table) : file_distribution(dist_file);
    const EventTable events({"A", "B"});
    const auto report =
        coefficient_report(dist, events, BoolExpr::event("A"), BoolExpr::event("B"));
    if (as_json) {
        json out;
        out["records"] = json::array();
        for (const auto& c : report) {
            json rec;
            rec["coefficient"] = c.label();
            rec["family"] = to_string(c.family);
            rec["range"] = to_string(c.range);
            rec["value"] = c.value.is_finite() ? json(c.value.value())
                                               : json(c.value.format());
            out["records"].push_back(std::move(rec));
        }
        std::cout << out.dump(2) << "\n";
    } else {
        for (const auto& c : report)
            std::cout << c.label() << " = " << c.value.format() << "\n";
    }
    return kExitOk;
}

// ------------------------------------------------------------------- convert

int run_convert(const std::string& value, const std::string& from_s,
                const std::string& to_s) {
    const auto from = range_from_string(from_s);
    const auto to = range_from_string(to_s);
    if (!from || !to)
        throw DomainError("range must be one of P, O, S");
    ExtReal v = ExtReal::undef();
    if (value == "inf")
        v = ExtReal::infinity();
    else
        v = ExtReal::of(std::stod(value));
    std::cout << convert(v, *from, *to).format() << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------- solve

json record_json(const QueryResult& r) {
    json rec;
    rec["query"] = r.query.label();
    rec["family"] = to_string(r.query.family);
    rec["range"] = to_string(r.query.range);
    if (!r.error.empty()) {
        rec["status"] = "ERROR";
        rec["error"] = r.error;
        return rec;
    }
    const Interval& iv = *r.interval;
    rec["status"] = to_string(iv.status);
    rec["lo"] = num_or_string(iv.lo);
    rec["hi"] = num_or_string(iv.hi);
    if (iv.witness_lo) rec["witness_lo"] = dist_json(*iv.witness_lo);
    if (iv.witness_hi) rec["witness_hi"] = dist_json(*iv.witness_hi);
    return rec;
}

void print_record_text(const QueryResult& r) {
    std::cout << r.query.label();
    if (!r.error.empty()) {
        std::cout << " ERROR: " << r.error << "\n";
        return;
    }
    const Interval& iv = *r.interval;
    switch (iv.status) {
        case IntervalStatus::Infeasible:
        case IntervalStatus::UndefinedQuery:
            std::cout << " " << to_string(iv.status) << "\n";
            break;
        default:
            std::cout << " = [" << fmt(iv.lo) << ", " << fmt(iv.hi) << "] "
                      << to_string(iv.status) << "\n";
    }
}

int exit_code_of(const std::vector<QueryResult>& results) {
    bool any_error = false, any_infeasible = false;
    for (const auto& r : results) {
        if (!r.error.empty()) any_error = true;
        else if (r.interval->status == IntervalStatus::Infeasible) any_infeasible = true;
    }
    if (any_error) return kExitNumeric;
    if (any_infeasible) return kExitInfeasible;
    return kExitOk;
}

int run_solve(const std::string& path, const SolveConfig& cfg, bool as_json) {
    const Program program = load_program(path);
    if (program.queries.empty())
        throw DomainError("program has no query statement");
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = answer_query(program, cfg);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    if (as_json) {
        json out;
        out["program"] = path;
        out["seed"] = cfg.seed;
        out["elapsed_ms"] = ms;
        out["records"] = json::array();
        for (const auto& r : results) out["records"].push_back(record_json(r));
        std::cout << out.dump(2) << "\n";
    } else {
        for (const auto& r : results) print_record_text(r);
    }
    for (const auto& r : results)
        if (r.interval && r.interval->status == IntervalStatus::Infeasible) {
            const auto core = infeasible_core(program, cfg);
            std::cerr << "infeasible constraint system";
            if (!core.empty()) {
                std::cerr << "; core:";
                for (const auto& c : core) std::cerr << "\n  " << c;
            }
            std::cerr << "\n";
            break;
        }
    return exit_code_of(results);
}

// --------------------------------------------------------------------- check

int run_check(const std::string& path, const SolveConfig& cfg, bool as_json) {
    const Program program = load_program(path);
    const FeasibilityReport rep = check_feasible(program, cfg);
    const char* verdict = rep.verdict == Feasibility::Feasible     ? "FEASIBLE"
                          : rep.verdict == Feasibility::Infeasible ? "INFEASIBLE"
                                                                   : "UNKNOWN";
    if (as_json) {
        json out;
        out["program"] = path;
        out["verdict"] = verdict;
        if (rep.witness) out["witness"] = dist_json(*rep.witness);
        if (!rep.detail.empty()) out["detail"] = rep.detail;
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << verdict << "\n";
        if (rep.witness) {
            std::cout << "witness:";
            for (double v : rep.witness->values()) std::cout << " " << fmt(v);
            std::cout << "\n";
        }
        if (!rep.detail.empty()) std::cout << rep.detail << "\n";
    }
    switch (rep.verdict) {
        case Feasibility::Feasible: return kExitOk;
        case Feasibility::Infeasible: return kExitInfeasible;
        case Feasibility::Unknown: return kExitNumeric;
    }
    return kExitNumeric;
}

// -------------------------------------------------------------------- oracle

int run_oracle(const std::string& path, const OracleConfig& cfg, bool as_json) {
    const Program program = load_program(path);
    if (program.queries.empty())
        throw DomainError("program has no query statement");
    const auto t0 = std::chrono::steady_clock::now();
    const auto outcomes = oracle_answer(program, cfg);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    if (as_json) {
        json out;
        out["program"] = path;
        out["seed"] = cfg.seed;
        out["samples"] = cfg.samples;
        out["elapsed_ms"] = ms;
        out["records"] = json::array();
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const auto& o = outcomes[i];
            json rec;
            rec["query"] = program.queries[i].label();
            rec["family"] = to_string(program.queries[i].family);
            rec["range"] = to_string(program.queries[i].range);
            rec["accepted"] = o.accepted;
            if (o.interval) {
                rec["status"] = to_string(o.interval->status);
                rec["lo"] = num_or_string(o.interval->lo);
                rec["hi"] = num_or_string(o.interval->hi);
            } else {
                rec["status"] = "NO_FEASIBLE_SAMPLE";
            }
            out["records"].push_back(std::move(rec));
        }
        std::cout << out.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const auto& o = outcomes[i];
            std::cout << program.queries[i].label();
            if (o.interval)
                std::cout << " = [" << fmt(o.interval->lo) << ", " << fmt(o.interval->hi)
                          << "] " << to_string(o.interval->status) << " (accepted "
                          << o.accepted << ")\n";
            else
                std::cout << " NO_FEASIBLE_SAMPLE (accepted " << o.accepted << ")\n";
        }
    }
    return kExitOk;
}

} // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"coefficients of relation: evaluation, conversion, and bound solving"};
    app.require_subcommand(1);

    // eval
    auto* eval = app.add_subcommand("eval", "coefficient report for a 2x2 table");
    std::string table, dist_file;
    bool eval_json = false;
    auto* topt = eval->add_option("--table", table, "x,y,z,w = P(A&B),P(A&-B),P(-A&B),P(-A&-B)");
    auto* fopt = eval->add_option("--dist-file", dist_file,
                                  "JSON array of 4 atom probabilities, atom-index order");
    eval->add_flag("--json", eval_json, "JSON output");
    topt->excludes(fopt);

    // convert
    auto* conv = app.add_subcommand("convert", "convert a value between P/O/S ranges");
    std::string cv, cfrom, cto;
    conv->add_option("value", cv, "value to convert (or 'inf')")->required();
    conv->add_option("from", cfrom, "source range: P, O, or S")->required();
    conv->add_option("to", cto, "target range: P, O, or S")->required();

    // solve / check
    SolveConfig scfg;
    std::string solve_file, check_file;
    bool solve_json = false, check_json = false;
    auto* solve = app.add_subcommand("solve", "bound the queries of a program");
    solve->add_option("program", solve_file, "program file (.rel)")->required();
    solve->add_option("--seed", scfg.seed, "search seed (default 42)");
    solve->add_option("--starts", scfg.starts, "multi-start budget (default 64)");
    solve->add_option("--eps-cond", scfg.eps_cond, "conditioning guard (default 1e-9)");
    solve->add_flag("--json", solve_json, "JSON output");

    auto* check = app.add_subcommand("check", "feasibility of a program's constraints");
    check->add_option("program", check_file, "program file (.rel)")->required();
    check->add_option("--seed", scfg.seed, "search seed (default 42)");
    check->add_option("--starts", scfg.starts, "multi-start budget (default 64)");
    check->add_option("--eps-cond", scfg.eps_cond, "conditioning guard (default 1e-9)");
    check->add_flag("--json", check_json, "JSON output");

    // oracle
    OracleConfig ocfg;
    std::string oracle_file;
    bool oracle_json = false;
    auto* oracle = app.add_subcommand("oracle", "sampling cross-check of a program (n <= 4)");
    oracle->add_option("program", oracle_file, "program file (.rel)")->required();
    oracle->add_option("--samples", ocfg.samples, "sample budget (default 1000000)");
    oracle->add_option("--seed", ocfg.seed, "sampling seed (default 42)");
    oracle->add_flag("--json", oracle_json, "JSON output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (app.got_subcommand(eval)) {
            if (table.empty() && dist_file.empty())
                throw DomainError("eval needs --table or --dist-file");
            return run_eval(table, dist_file, eval_json);
        }
        if (app.got_subcommand(conv)) return run_convert(cv, cfrom, cto);
        if (app.got_subcommand(solve)) return run_solve(solve_file, scfg, solve_json);
        if (app.got_subcommand(check)) return run_check(check_file, scfg, check_json);
        if (app.got_subcommand(oracle)) return run_oracle(oracle_file, ocfg, oracle_json);
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const UnknownFeasibilityError& e) {
        std::cerr << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

} // namespace relq
