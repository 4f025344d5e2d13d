#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ssinv {

// All floats written to data files go through fmt_double (17 significant
// digits, round-trip exact) so re-runs with the same seed produce
// byte-identical files.
std::string fmt_double(double v);

void append_json_double(std::string& out, double v);
void append_json_array(std::string& out, const std::vector<double>& v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a; used to stamp configs into checkpoints.
std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace ssinv
