#ifndef NEGDEP_IO_HPP
#define NEGDEP_IO_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/kernel.hpp"

namespace negdep::io {

/// 17 significant digits, '.' decimal, locale independent.
std::string format_double(double x);
/// "re" for real values, otherwise "re+imi" / "re-imi".
std::string format_complex(cplx z);
double parse_double(std::string_view s);
cplx parse_complex(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep);

/// Kernel CSV: a "N,kind,hermitian" header, one value line, then N rows of N cells.
std::string kernel_to_csv(const KernelMatrix& k);
KernelMatrix kernel_from_csv(const std::string& text);
/// {"N": n, "kind": ..., "hermitian": ..., "entries": [[[re, im], ...], ...]}
std::string kernel_to_json(const KernelMatrix& k);
KernelMatrix kernel_from_json(const std::string& text);

/// Chooses the format from the extension (.json, otherwise CSV).
KernelMatrix load_kernel(const std::string& path);
void save_kernel(const KernelMatrix& k, const std::string& path);

/// Plain numeric CSV. Lines starting with '#' and a leading non-numeric header are skipped.
MatrixXd matrix_from_csv(const std::string& text);
MatrixXc complex_matrix_from_csv(const std::string& text);
std::string matrix_to_csv(const MatrixXd& m);

std::string read_file(const std::string& path);
/// Temporary sibling file plus rename, so readers never see a partial file.
void atomic_write(const std::string& path, const std::string& content);
/// "-" writes to stdout, anything else goes through atomic_write.
void write_output(const std::string& path, const std::string& content);

/// "# negdep <version> seed=<seed>" followed by a newline.
std::string output_header(std::uint64_t seed);

}  // namespace negdep::io

#endif
