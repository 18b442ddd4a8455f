#pragma once

#include <string>

#include "kgl/lattice.hpp"

namespace kgl {

// Shortest decimal that round-trips the double exactly.
std::string format_full(double x);

// Write via temp file + rename so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// Field file: one header line "dim,radius,boundary", then one value per line
// in row-major site order (first coordinate slowest).
void write_field_csv(const std::string& path, const RealField& f);
RealField read_field_csv(const std::string& path);

std::string field_to_csv(const RealField& f);
RealField field_from_csv(const std::string& text);

}  // namespace kgl
