#pragma once

#include "cstop/measure.hpp"
#include "cstop/rational.hpp"
#include "cstop/tree.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cstop {

using Json = nlohmann::json;

/// File-level description of an instance; functions are kept as source text
/// so that it can be written back unchanged.
struct InstanceSpec {
    struct BranchSpec {
        Rational p;
        std::vector<Rational> w;
        friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
    };
    struct IneqSpec {
        std::string g;
        ExtendedReal y = ExtendedReal::pos_inf();
        friend bool operator==(const IneqSpec&, const IneqSpec&) = default;
    };
    struct EqSpec {
        std::string h;
        ExtendedReal z = 0;
        friend bool operator==(const EqSpec&, const EqSpec&) = default;
    };

    Rational t0 = 0;
    Rational dt = 1;
    int depth = 0;
    std::vector<std::vector<BranchSpec>> branching;  // one law, or one per step
    Path x0_history;
    Path w_history;  // optional; empty when absent
    std::optional<int> snap_bits;
    std::vector<std::string> drift;      // l entries
    std::vector<std::string> diffusion;  // l * d entries, row-major
    std::string f = "zero";
    std::string pi = "zero";
    std::vector<IneqSpec> ineq;
    std::vector<EqSpec> eq;

    friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

/// Numbers may be JSON numbers or strings ("3/2", "0.25", "inf"). JSON
/// floating-point numbers are read through their shortest decimal text.
Rational json_rational(const Json& j);
ExtendedReal json_extended(const Json& j);
Json rational_json(const Rational& q);       // "num/den"
Json extended_json(const ExtendedReal& x);  // "inf", "-inf" or "num/den"

InstanceSpec parse_instance(const Json& j);
Json emit_instance(const InstanceSpec& spec);
/// Errors: as build_tree, plus ParseError for bad function text.
TreeInstance build_instance(const InstanceSpec& spec);

/// FNV-1a 64 over the canonical emitted form.
std::uint64_t instance_hash(const InstanceSpec& spec);
std::string hash_hex(std::uint64_t h);

/// {"ineq": [...], "eq": [...]}
BudgetVector parse_budgets(const Json& j);
Json emit_budgets(const BudgetVector& b);

/// Map from word text to q. Missing non-leaf nodes default to q = 0,
/// leaves to q = 1. Errors: NodeNotInTree, RuleShapeMismatch.
RandomizedStoppingRule parse_rule(const Json& j, const TreeInstance& tree);
Json emit_rule(const RandomizedStoppingRule& rule, const TreeInstance& tree);

/// {"s": {word: mass}, "u": {word: mass}}; missing entries are 0.
StoppingMeasure parse_measure(const Json& j, const TreeInstance& tree);
Json emit_measure(const StoppingMeasure& m, const TreeInstance& tree);

/// Errors: IoError, ParseError.
Json read_json(const std::filesystem::path& path);
/// Writes to a temporary file in the same directory, then renames.
void write_json_atomic(const std::filesystem::path& path, const Json& j);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace cstop
