#pragma once
#include <iosfwd>

#include "dmech/config.hpp"

namespace dmech {

/// Runs the configured trajectory and writes the CSV file. Returns the
/// process exit status: 0 on success, 1 on configuration errors, 2 when the
/// solver failed mid-run (the partial file is kept, flagged in a footer
/// comment). A human-readable summary goes to `out`.
int cmd_simulate(const RunConfig& cfg, std::ostream& out);

enum class CheckKind { Axioms, Symplectic, Convergence, Conservation };

CheckKind parse_check_kind(const std::string& name);

/// Runs the named diagnostic with config-supplied parameters and prints a
/// report; nonzero exit when a threshold fails.
int cmd_check(const RunConfig& cfg, CheckKind kind, std::ostream& out);

} // namespace dmech
