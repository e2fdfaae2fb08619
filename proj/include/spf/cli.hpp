#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spf::cli {

/// Process exit codes.
enum Exit : int {
    kOk = 0,
    kSafetyFault = 1,     // run: a trajectory left the practical free space; also internal failures
    kUndesirable = 2,     // analyze: a stable or undecidable equilibrium exists
    kBadDocument = 3,     // schema violation, bad override or usage error
    kInfeasible = 4,      // feasibility or penalty condition violated
    kUnsupported = 5,     // e.g. field export for a 3D world
};

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;  // empty: the document's output directory
    std::optional<std::uint64_t> seed;
    unsigned jobs = 0;
};

struct FieldOptions {
    int nx = 100;
    int ny = 100;
    std::optional<std::vector<double>> box;  // xmin xmax ymin ymax; default world bounds
    int contour_resolution = 400;
};

int cmd_run(const Options& opt);
int cmd_analyze(const Options& opt);
int cmd_field(const Options& opt, const FieldOptions& field);
int cmd_validate(const Options& opt);

/// Parses argv and dispatches to a subcommand.
int main(int argc, char** argv);

}  // namespace spf::cli
