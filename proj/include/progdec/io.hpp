#pragma once

#include "progdec/core.hpp"
#include "progdec/subspace.hpp"
#include "progdec/trace.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace progdec::io {

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Row-major CSV; blank lines and lines starting with '#' are skipped. All
/// rows must have the same length.
MatrixXd parse_matrix(std::istream& in, const std::string& what = "matrix");
MatrixXd read_matrix(const std::string& path);

/// A single row or a single column.
VectorXd read_vector(const std::string& path);

/// Inline vector: "1,2,3" (whitespace tolerated).
VectorXd parse_vector(const std::string& text);

/// Each CSV row is one spanning vector.
SubspaceXd read_subspace(const std::string& path);

using Metadata = std::map<std::string, std::string>;

/// Header k,res,lyapunov,alpha,gap followed by x_i, y_i, xbar_i, ybar_i (z_i,
/// zbar_i for z-space traces); 17 significant digits; a trailing
/// "# status=..." line.
void write_trace_csv(std::ostream& out, const IterateTraceXd& trace, const Metadata& meta = {});

/// Same fields as the CSV; NaN entries become null. Status and metadata go in
/// a top-level "metadata" object.
void write_trace_json(std::ostream& out, const IterateTraceXd& trace, const Metadata& meta = {});

}  // namespace progdec::io
