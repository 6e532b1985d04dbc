#pragma once

#include <string>

namespace riser {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Writes via a temp file in the same directory, then renames into place,
/// so consumers never observe partial output.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace riser
