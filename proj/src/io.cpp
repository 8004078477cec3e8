#include "negdep/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

#include "json.hpp"

namespace negdep::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "True") return true;
  if (s == "0" || s == "false" || s == "False") return false;
  throw std::invalid_argument("expected a boolean, got '" + std::string(s) + "'");
}

bool looks_numeric(std::string_view s) {
  try {
    parse_complex(s);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

template <class Scalar, class Parse>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> parse_table(const std::string& text, Parse parse) {
  std::vector<std::string> lines = data_lines(text);
  if (!lines.empty()) {
    const auto cells = split(lines.front(), ',');
    bool numeric = true;
    for (const auto& c : cells) numeric = numeric && looks_numeric(c);
    if (!numeric) lines.erase(lines.begin());
  }
  if (lines.empty()) throw std::invalid_argument("CSV matrix has no rows");
  const Index cols = static_cast<Index>(split(lines.front(), ',').size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(static_cast<Index>(lines.size()), cols);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    if (static_cast<Index>(cells.size()) != cols)
      throw std::invalid_argument("CSV matrix row " + std::to_string(r + 1) + " has the wrong number of cells");
    for (Index c = 0; c < cols; ++c) m(static_cast<Index>(r), c) = parse(cells[static_cast<std::size_t>(c)]);
  }
  return m;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_complex(cplx z) {
  if (z.imag() == 0.0) return format_double(z.real());
  std::string im = format_double(z.imag());
  if (im.front() != '-') im.insert(im.begin(), '+');
  return format_double(z.real()) + im + "i";
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return x;
}

cplx parse_complex(std::string_view s) {
  s = trim(s);
  if (s.empty() || s.back() != 'i') return parse_double(s);
  s.remove_suffix(1);
  // Split at the last sign that is not an exponent sign or the leading sign.
  for (std::size_t p = s.size(); p-- > 1;) {
    if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E')
      return {parse_double(s.substr(0, p)), parse_double(s.substr(p))};
  }
  return {0.0, parse_double(s)};
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

std::string kernel_to_csv(const KernelMatrix& k) {
  std::string out = "N,kind,hermitian\n";
  out += std::to_string(k.size()) + "," + to_string(k.kind()) + "," + (k.hermitian() ? "true" : "false") + "\n";
  const MatrixXc& e = k.entries();
  for (Index i = 0; i < e.rows(); ++i) {
    for (Index j = 0; j < e.cols(); ++j) {
      if (j) out += ',';
      out += format_complex(e(i, j));
    }
    out += '\n';
  }
  return out;
}

KernelMatrix kernel_from_csv(const std::string& text) {
  const std::vector<std::string> lines = data_lines(text);
  if (lines.size() < 2 || lines[0].rfind("N,kind,hermitian", 0) != 0)
    throw std::invalid_argument("kernel CSV must start with the header 'N,kind,hermitian'");
  const auto meta = split(lines[1], ',');
  if (meta.size() != 3) throw std::invalid_argument("kernel CSV metadata line needs N,kind,hermitian");
  const double nd = parse_double(meta[0]);
  if (!(nd >= 0.0) || nd != std::floor(nd)) throw std::invalid_argument("kernel CSV: N must be a nonnegative integer");
  const auto n = static_cast<Index>(nd);
  const KernelKind kind = kernel_kind_from_string(meta[1]);
  const bool herm = parse_bool(meta[2]);
  if (static_cast<Index>(lines.size()) != n + 2)
    throw std::invalid_argument("kernel CSV: expected " + std::to_string(n) + " matrix rows");
  MatrixXc e(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto cells = split(lines[static_cast<std::size_t>(i + 2)], ',');
    if (static_cast<Index>(cells.size()) != n)
      throw std::invalid_argument("kernel CSV: row " + std::to_string(i) + " needs " + std::to_string(n) + " cells");
    for (Index j = 0; j < n; ++j) e(i, j) = parse_complex(cells[static_cast<std::size_t>(j)]);
  }
  return KernelMatrix(std::move(e), kind, herm);
}

std::string kernel_to_json(const KernelMatrix& k) {
  nlohmann::ordered_json j;
  j["N"] = k.size();
  j["kind"] = to_string(k.kind());
  j["hermitian"] = k.hermitian();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Index r = 0; r < k.size(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Index c = 0; c < k.size(); ++c) row.push_back({k.entries()(r, c).real(), k.entries()(r, c).imag()});
    rows.push_back(std::move(row));
  }
  j["entries"] = std::move(rows);
  return j.dump(2) + "\n";
}

KernelMatrix kernel_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const auto n = j.at("N").get<Index>();
    const KernelKind kind = kernel_kind_from_string(j.at("kind").get<std::string>());
    const bool herm = j.at("hermitian").get<bool>();
    const auto& rows = j.at("entries");
    if (n < 0 || static_cast<Index>(rows.size()) != n) throw std::invalid_argument("kernel JSON: entries must have N rows");
    MatrixXc e(n, n);
    for (Index r = 0; r < n; ++r) {
      const auto& row = rows.at(static_cast<std::size_t>(r));
      if (static_cast<Index>(row.size()) != n) throw std::invalid_argument("kernel JSON: each row needs N entries");
      for (Index c = 0; c < n; ++c) {
        const auto& cell = row.at(static_cast<std::size_t>(c));
        if (!cell.is_array() || cell.size() != 2) throw std::invalid_argument("kernel JSON: entries are [re, im] pairs");
        e(r, c) = cplx(cell[0].get<double>(), cell[1].get<double>());
      }
    }
    return KernelMatrix(std::move(e), kind, herm);
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("kernel JSON: ") + ex.what());
  }
}

KernelMatrix load_kernel(const std::string& path) {
  const std::string text = read_file(path);
  if (std::filesystem::path(path).extension() == ".json") return kernel_from_json(text);
  return kernel_from_csv(text);
}

void save_kernel(const KernelMatrix& k, const std::string& path) {
  atomic_write(path, std::filesystem::path(path).extension() == ".json" ? kernel_to_json(k) : kernel_to_csv(k));
}

MatrixXd matrix_from_csv(const std::string& text) { return parse_table<double>(text, parse_double); }

MatrixXc complex_matrix_from_csv(const std::string& text) { return parse_table<cplx>(text, parse_complex); }

std::string matrix_to_csv(const MatrixXd& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::invalid_argument("cannot rename onto " + path + ": " + ec.message());
  }
}

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  atomic_write(path, content);
}

std::string output_header(std::uint64_t seed) {
  return std::string("# negdep ") + version() + " seed=" + std::to_string(seed) + "\n";
}

}  // namespace negdep::io
