#pragma once

#include "cstop/io.hpp"
#include "cstop/monte_carlo.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cstop {

inline constexpr const char* kVersion = "0.1.0";

struct GenShape {
    int depth = 2;
    int branches = 2;
    int ineq = 1;
    int eq = 0;
    bool path_dependent = false;  // drift and reward use x_sup
    int depth_cap = 8;
};

/// Random instance with rational data, deterministic in (seed, shape).
/// Declared budgets are the accruals of a random rule, loosened by a random
/// slack (or set to +inf) on inequalities, so every generated instance is
/// feasible. Errors: ShapeTooLarge, InvalidInstance.
InstanceSpec generate_instance(std::uint64_t seed, const GenShape& shape);

struct ExperimentRecord {
    std::string command;
    Json parameters = Json::object();
    std::string instance_hash;
    Json outputs = Json::object();
    double wall_ms = 0;
    std::uint64_t seed = 0;
    std::string version = kVersion;
    bool pass = true;

    Json to_json() const;
};

enum class SuiteKind { Equivalence, Dpp, Membership, All };
SuiteKind parse_suite_kind(const std::string& s);
std::string to_string(SuiteKind k);

struct SuiteRow {
    std::string instance;
    std::string hash;
    std::string check;
    bool pass = false;
    std::string max_gap;  // rational text; "-" when not applicable
    double runtime_ms = 0;
    std::string detail;
};

struct SuiteSummary {
    std::vector<SuiteRow> rows;  // input order
    std::size_t passed = 0;
    std::size_t total = 0;
    std::string tsv() const;
};

/// Runs one verifier kind on a single instance file's contents.
std::vector<SuiteRow> run_checks(const std::string& name, const InstanceSpec& spec, SuiteKind kind, std::uint64_t seed);

/// Every *.json file in `dir` except *.record.json (sorted by name) is an instance. Per-instance
/// records go to out_dir/<stem>.record.json, the aggregate to out_dir/suite.tsv.
/// Errors: NoInstances, IoError.
SuiteSummary run_suite(const std::filesystem::path& dir, SuiteKind kind, const std::filesystem::path& out_dir,
                       std::uint64_t seed, Execution exec = Execution::Parallel);

}  // namespace cstop
