#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace nhrf {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    kPass = 0,
    kResidualFail = 1,
    kConfigError = 2,
    kDegenerate = 3,
    kEvalError = 4,
    kUnverified = 5,
};

struct RunConfig {
    std::string config;  // recipe / run description (JSON)
    std::string out;     // metric JSON or CSV report; empty = none
    std::optional<double> tol;
    int count = 0;       // > 0 replaces every grid axis count
    unsigned jobs = 0;   // 0 = all cores
    unsigned long long seed = 1;
};

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_flow(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_geroch(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct ExprCheck {
    std::string expr;
    std::string wrt;  // optional derivative variable
    std::string at;   // "x2=1,v=0.5"
};
int cmd_expr_check(const ExprCheck& c, std::ostream& out, std::ostream& err);

// Full argument parsing; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nhrf
