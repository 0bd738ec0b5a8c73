#pragma once

#include "lrmc/model.hpp"

#include <iosfwd>
#include <string>

namespace lrmc::io {

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);

// Observation file: header "# m1 m2 n", then one "row col value" line per
// observation with 0-based indices.
void write_observations(std::ostream& out, const Dataset& data);
Dataset read_observations(std::istream& in);
void save_observations(const std::string& path, const Dataset& data);
Dataset load_observations(const std::string& path);

// Sampling distribution file: header "# m1 m2 count", then "row col prob".
// Entries that are not listed are zero, which fails validation on load.
void write_distribution(std::ostream& out, const SamplingDistribution& pi);
SamplingDistribution read_distribution(std::istream& in);
void save_distribution(const std::string& path, const SamplingDistribution& pi);
SamplingDistribution load_distribution(const std::string& path);

// Dense matrix CSV: header "# m1 m2", then m1 comma-separated rows.
void write_matrix_csv(std::ostream& out, const Matrix& A);
Matrix read_matrix_csv(std::istream& in);
void save_matrix_csv(const std::string& path, const Matrix& A);
Matrix load_matrix_csv(const std::string& path);

/// Writes `text` to `path`, throwing on failure.
void save_text(const std::string& path, const std::string& text);
std::string load_text(const std::string& path);

} // namespace lrmc::io
