#pragma once

#include "confplane/asymptotics.hpp"
#include "confplane/field.hpp"
#include "confplane/oracle.hpp"

#include "json.hpp"

#include <string>
#include <string_view>

namespace confplane {

/// Machine-readable report assembly. Reports are ordered JSON so identical
/// inputs render byte-identical text; the timings block is appended last and
/// is the only nondeterministic section. Non-finite numbers serialize as
/// null (JSON has no infinity), with the accompanying flags carrying the
/// verdict. Layout documented in docs/report-schema.md.
using Json = nlohmann::ordered_json;

inline constexpr const char* tool_name = "confplane";
inline constexpr const char* tool_version = "1.0.0";
inline constexpr const char* report_schema_version = "1.0";

/// FNV-1a 64-bit digest (16 lowercase hex digits) of a byte string.
std::string fnv1a64(std::string_view bytes);

/// Digest of a file's contents, prefixed with the algorithm name
/// ("fnv1a64:..."); throws std::runtime_error when the file is unreadable.
std::string file_digest(const std::string& path);

/// Header skeleton {tool, schema, command}. The caller appends input echo,
/// parameters, and verdict blocks in a fixed order; finalize_report attaches
/// the timings block last.
Json new_report(const std::string& command);
void finalize_report(Json& rep, double total_ms);

/// Verdict blocks. Every block carries the tolerances and the parameters
/// that produced it, so a report alone suffices to reproduce the run.
Json to_json(const AlphaEstimate& a);
Json to_json(const SubharmonicVerdict& v, double window, int n);
Json to_json(const EscapeReport& r);
Json to_json(const CrossValidation& cv);

/// Lattice parameters plus min/max over the valid nodes.
Json grid_stats(const ScalarGrid& g);

} // namespace confplane
