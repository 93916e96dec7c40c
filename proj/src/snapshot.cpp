#include "tpf/snapshot.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tpf {

namespace {

std::string header_line(const GridSpec& g) {
  std::string s = std::to_string(g.dim()) + " " + std::to_string(g.n(0)) + " " + std::to_string(g.n(1));
  if (g.dim() == 3) s += " " + std::to_string(g.n(2));
  s += " " + format_double(g.h());
  return s;
}

SnapshotHeader parse_header(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  SnapshotHeader h;
  if (tok.empty()) throw std::runtime_error("snapshot: empty header");
  h.dim = std::stoi(tok[0]);
  const std::size_t expected = h.dim == 3 ? 5 : 4;
  if ((h.dim != 2 && h.dim != 3) || tok.size() != expected)
    throw std::runtime_error("snapshot: malformed header '" + line + "'");
  for (int a = 0; a < h.dim; ++a) h.cells[static_cast<std::size_t>(a)] = std::stoi(tok[static_cast<std::size_t>(a) + 1]);
  h.h = parse_double(tok.back());
  return h;
}

std::size_t expected_count(const SnapshotHeader& h) {
  return static_cast<std::size_t>(h.cells[0]) * static_cast<std::size_t>(h.cells[1]) *
         static_cast<std::size_t>(h.dim == 3 ? h.cells[2] : 1);
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double x = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("not a number: '" + token + "'");
  return x;
}

void write_snapshot_text(const std::filesystem::path& path, const CellField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << header_line(f.grid()) << '\n';
  const auto nx = static_cast<std::size_t>(f.grid().n(0));
  for (std::size_t c = 0; c < f.size(); ++c) {
    out << format_double(f[c]) << ((c + 1) % nx == 0 ? '\n' : ' ');
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_snapshot_binary(const std::filesystem::path& path, const CellField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << header_line(f.grid()) << '\n';
  for (std::size_t c = 0; c < f.size(); ++c) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(f[c]);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xffu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Snapshot read_snapshot_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  Snapshot s;
  s.header = parse_header(line);
  const std::size_t n = expected_count(s.header);
  s.values.reserve(n);
  for (std::string tok; in >> tok;) s.values.push_back(parse_double(tok));
  if (s.values.size() != n) throw std::runtime_error("snapshot: wrong value count in " + path.string());
  return s;
}

Snapshot read_snapshot_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  Snapshot s;
  s.header = parse_header(line);
  const std::size_t n = expected_count(s.header);
  s.values.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8))
      throw std::runtime_error("snapshot: truncated binary " + path.string());
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    s.values[c] = std::bit_cast<double>(bits);
  }
  return s;
}

CellField to_field(const Snapshot& s, const GridPtr& grid) {
  const GridSpec& g = *grid;
  bool ok = s.header.dim == g.dim() && s.header.h == g.h();
  for (int a = 0; a < g.dim(); ++a) ok = ok && s.header.cells[static_cast<std::size_t>(a)] == g.n(a);
  if (!ok) throw GridError("snapshot header does not match grid");
  return CellField(grid, s.values);
}

void write_vtk(const std::filesystem::path& path,
               const std::vector<std::pair<std::string, const CellField*>>& fields) {
  if (fields.empty()) throw std::invalid_argument("write_vtk: no fields");
  const GridSpec& g = fields.front().second->grid();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "# vtk DataFile Version 3.0\n"
      << "two-phase flow snapshot\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << g.n(0) + 1 << ' ' << g.n(1) + 1 << ' ' << (g.dim() == 3 ? g.n(2) + 1 : 1) << '\n'
      << "ORIGIN " << format_double(g.origin(0)) << ' ' << format_double(g.origin(1)) << ' '
      << format_double(g.dim() == 3 ? g.origin(2) : 0.0) << '\n'
      << "SPACING " << format_double(g.h()) << ' ' << format_double(g.h()) << ' '
      << format_double(g.dim() == 3 ? g.h() : 1.0) << '\n'
      << "CELL_DATA " << g.num_cells() << '\n';
  for (const auto& [name, field] : fields) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < field->size(); ++c) out << format_double((*field)[c]) << '\n';
  }
  out << "SCALARS active int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < g.num_cells(); ++c) out << (g.active(c) ? 1 : 0) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace tpf
