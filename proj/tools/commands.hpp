#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace ahelab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheck = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr const char* kSchemaVersion = "1.0";

using Cell = std::variant<double, long long, std::string, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct Check {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tol = 0.0;
    bool passed = false;
};

/// Resolved key = value configuration of one run.
using Config = std::map<std::string, std::string>;

struct CommandResult {
    std::vector<Table> tables;  // first table goes to stdout
    std::vector<Check> checks;
    std::string numeric_failure;  // non-empty: exit 4 after writing outputs
};

/// Thrown for bad flags, values and config files.
struct ConfigError {
    std::string message;
};

[[nodiscard]] std::string format_cell(const Cell& c);
[[nodiscard]] std::string csv_escape(const std::string& s);
void write_csv(std::ostream& os, const Table& t);
void write_json(std::ostream& os, const Table& t);

/// Flat "key = value" lines; '#' starts a comment. A JSON manifest is also
/// accepted, in which case its "config" object is used.
[[nodiscard]] Config read_config_file(const std::string& path);

/// "3", "1,2,5", "0..4", "0..1:0.25".
[[nodiscard]] std::vector<double> parse_real_list(const std::string& key, const std::string& s);
[[nodiscard]] std::vector<int> parse_int_list(const std::string& key, const std::string& s);

/// Full entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ahelab::cli
