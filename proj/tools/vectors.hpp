#pragma once

// Regenerates the golden-vector files from fixed, hash-derived inputs. The
// files under tests/data were produced by an independent implementation;
// matching them byte for byte cross-checks this library.

#include <filesystem>
#include <string>

namespace ctxen::tools {

/// Shortest round-trip decimal in the style of Python's float repr
/// ("0.0", "1e-09", "100000.0").
std::string float_repr(double v);

void write_vector_files(const std::filesystem::path& dir);

}  // namespace ctxen::tools
