#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "p2ot/types.hpp"

namespace p2ot::cli {

/// Reads a header line followed by one row of reals per line. Blank lines are
/// skipped. Ragged or unparsable rows throw invalid-input naming the line.
Matrix read_matrix_csv(std::istream& in, const std::string& source);

/// Header "c0,c1,…" then one row per line, shortest round-trip formatting.
void write_matrix_csv(std::ostream& out, const Matrix& values);

struct LabelColumns {
  std::vector<int> first;
  std::vector<int> second;
};

/// Two integer columns under a header, e.g. "pred,true".
LabelColumns read_label_csv(std::istream& in, const std::string& source);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace p2ot::cli
