#pragma once

#include <string>
#include <vector>

#include "vps/field.hpp"

namespace vps {

// Binary snapshot container. A file is a sequence of records, each:
//   magic      5 bytes "VPSF1"
//   bc         u8, 0 = neumann, 1 = periodic
//   components u8 (1 scalar, 2 staggered vector, 3 symmetric tensor)
//   name_len   u16 LE
//   nx, ny     u32 LE
//   hx, hy     f64 LE
//   name       name_len bytes
//   data       components arrays of nx*ny f64 LE, storage order (i fastest)
// Vector components are the staggered face arrays as stored; tensor
// components are written in the order c11, c12, c22.

struct SnapshotRecord {
  std::string name;
  Grid grid;
  std::vector<std::vector<double>> components;
};

class SnapshotWriter {
 public:
  explicit SnapshotWriter(const std::string& path);
  ~SnapshotWriter();
  SnapshotWriter(const SnapshotWriter&) = delete;
  SnapshotWriter& operator=(const SnapshotWriter&) = delete;

  void add(const std::string& name, const ScalarField& f);
  void add(const std::string& name, const VectorField& v);
  void add(const std::string& name, const SymTensorField& t);
  // Flushes and closes; throws on IO failure. Called by the destructor if
  // not invoked explicitly, where failures terminate silently instead.
  void close();

 private:
  void write_record(const std::string& name, const Grid& g,
                    std::vector<const std::vector<double>*> comps);
  struct Impl;
  Impl* impl_;
};

std::vector<SnapshotRecord> read_snapshot(const std::string& path);

// Legacy ASCII VTK structured-points output for external viewers. Fields are
// point data on the cell-center lattice; vectors are interpolated to centers.
void write_vtk(const std::string& path, const Grid& g,
               const std::vector<std::pair<std::string, const ScalarField*>>& scalars,
               const std::vector<std::pair<std::string, const VectorField*>>& vectors);

}  // namespace vps
