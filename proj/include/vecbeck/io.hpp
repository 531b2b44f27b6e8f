#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "vecbeck/grid.hpp"

namespace vecbeck {

inline constexpr const char* format_version = "vecbeck/1";

// Problem instance as stored on disk: a vector measure on a grid, plus an
// optional density exponent p that switches the solver family.
struct Instance {
    GridSpec grid;
    int m = 0;
    VectorMeasure measure;
    std::optional<double> p;
    std::string kind;
    std::optional<uint64_t> seed;
};

Instance read_instance(const std::string& path);
void write_instance(const Instance& inst, const std::string& path);

// Plain numeric CSV, '#' comment lines allowed, one matrix per file.
Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const Matrix& a, const std::string& path);

// Cell-indexed CSV with grid metadata in comment lines; round-trips exactly.
void write_matrix_field_csv(const MatrixField& f, const std::string& path);
MatrixField read_matrix_field_csv(const std::string& path);
void write_vector_field_csv(const VectorField& f, const std::string& path);
VectorField read_vector_field_csv(const std::string& path);

}  // namespace vecbeck
