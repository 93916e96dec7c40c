#pragma once

// Field snapshots.
//
// Text: one header line "dim N M [P] h", then the cell values in storage
// order (x fastest), whitespace separated, shortest round-trip decimals.
// Binary: the same header line terminated by '\n', followed by the values as
// little-endian IEEE-754 doubles.

#include <filesystem>
#include <string>
#include <vector>

#include "tpf/grid.hpp"

namespace tpf {

struct SnapshotHeader {
  int dim = 2;
  std::array<int, 3> cells{1, 1, 1};
  double h = 0.0;
};

struct Snapshot {
  SnapshotHeader header;
  std::vector<double> values;
};

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);
/// Strict parse of a full token as double; throws std::invalid_argument.
double parse_double(const std::string& token);

void write_snapshot_text(const std::filesystem::path& path, const CellField& f);
void write_snapshot_binary(const std::filesystem::path& path, const CellField& f);
Snapshot read_snapshot_text(const std::filesystem::path& path);
Snapshot read_snapshot_binary(const std::filesystem::path& path);

/// Rebuild a field on `grid`; throws GridError if the header disagrees.
CellField to_field(const Snapshot& s, const GridPtr& grid);

/// Legacy ASCII VTK STRUCTURED_POINTS file with one CELL_DATA scalar per entry.
void write_vtk(const std::filesystem::path& path,
               const std::vector<std::pair<std::string, const CellField*>>& fields);

}  // namespace tpf
