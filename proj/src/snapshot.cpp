#include "vps/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "vps/ops.hpp"

namespace vps {

static_assert(std::endian::native == std::endian::little,
              "snapshot IO assumes a little-endian host");

namespace {

constexpr char kMagic[5] = {'V', 'P', 'S', 'F', '1'};

void put_u16(std::ostream& os, std::uint16_t v) {
  char b[2];
  std::memcpy(b, &v, 2);
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  os.write(b, 4);
}

void put_f64(std::ostream& os, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  os.write(b, 8);
}

template <typename T>
T get_raw(std::istream& is) {
  char b[sizeof(T)];
  is.read(b, sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

struct SnapshotWriter::Impl {
  std::ofstream os;
  std::string path;
  bool closed = false;
};

SnapshotWriter::SnapshotWriter(const std::string& path) : impl_(new Impl) {
  impl_->path = path;
  impl_->os.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->os) {
    delete impl_;
    throw std::runtime_error("cannot open snapshot file: " + path);
  }
}

SnapshotWriter::~SnapshotWriter() {
  if (!impl_->closed) impl_->os.close();
  delete impl_;
}

void SnapshotWriter::close() {
  impl_->os.close();
  impl_->closed = true;
  if (impl_->os.fail())
    throw std::runtime_error("snapshot write failed: " + impl_->path);
}

void SnapshotWriter::write_record(const std::string& name, const Grid& g,
                                  std::vector<const std::vector<double>*> comps) {
  if (name.empty() || name.size() > 0xffff)
    throw std::invalid_argument("snapshot record name length out of range");
  auto& os = impl_->os;
  os.write(kMagic, 5);
  os.put(g.bc == Bc::neumann ? 0 : 1);
  os.put(static_cast<char>(comps.size()));
  put_u16(os, static_cast<std::uint16_t>(name.size()));
  put_u32(os, static_cast<std::uint32_t>(g.nx));
  put_u32(os, static_cast<std::uint32_t>(g.ny));
  put_f64(os, g.hx());
  put_f64(os, g.hy());
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  for (const auto* c : comps)
    os.write(reinterpret_cast<const char*>(c->data()),
             static_cast<std::streamsize>(c->size() * sizeof(double)));
  if (!os) throw std::runtime_error("snapshot write failed: " + impl_->path);
}

void SnapshotWriter::add(const std::string& name, const ScalarField& f) {
  write_record(name, f.grid, {&f.v});
}

void SnapshotWriter::add(const std::string& name, const VectorField& v) {
  write_record(name, v.grid, {&v.x, &v.y});
}

void SnapshotWriter::add(const std::string& name, const SymTensorField& t) {
  write_record(name, t.grid, {&t.c11, &t.c12, &t.c22});
}

std::vector<SnapshotRecord> read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open snapshot file: " + path);
  std::vector<SnapshotRecord> out;
  while (true) {
    char magic[5];
    is.read(magic, 5);
    if (is.gcount() == 0) break;
    if (is.gcount() != 5 || std::memcmp(magic, kMagic, 5) != 0)
      throw std::runtime_error("bad snapshot magic in " + path);
    int bc_raw = is.get();
    int ncomp = is.get();
    auto name_len = get_raw<std::uint16_t>(is);
    auto nx = get_raw<std::uint32_t>(is);
    auto ny = get_raw<std::uint32_t>(is);
    double hx = get_raw<double>(is);
    double hy = get_raw<double>(is);
    if (!is || bc_raw < 0 || bc_raw > 1 || ncomp < 1 || ncomp > 3)
      throw std::runtime_error("corrupt snapshot header in " + path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    Grid g(static_cast<int>(nx), static_cast<int>(ny), hx * nx, hy * ny,
           bc_raw == 0 ? Bc::neumann : Bc::periodic);
    SnapshotRecord rec{name, g, {}};
    for (int c = 0; c < ncomp; ++c) {
      std::vector<double> data(g.size());
      is.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
      if (!is) throw std::runtime_error("truncated snapshot record in " + path);
      rec.components.push_back(std::move(data));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_vtk(const std::string& path, const Grid& g,
               const std::vector<std::pair<std::string, const ScalarField*>>& scalars,
               const std::vector<std::pair<std::string, const VectorField*>>& vectors) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open vtk file: " + path);
  os << "# vtk DataFile Version 3.0\n"
     << "fields\nASCII\nDATASET STRUCTURED_POINTS\n"
     << "DIMENSIONS " << g.nx << ' ' << g.ny << " 1\n"
     << "ORIGIN " << 0.5 * g.hx() << ' ' << 0.5 * g.hy() << " 0\n"
     << "SPACING " << g.hx() << ' ' << g.hy() << " 1\n"
     << "POINT_DATA " << g.size() << '\n';
  os.precision(9);
  for (const auto& [name, f] : scalars) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f->v) os << v << '\n';
  }
  ScalarField cx(g), cy(g);
  for (const auto& [name, v] : vectors) {
    to_nodes(*v, cx, cy);
    os << "VECTORS " << name << " double\n";
    for (std::size_t k = 0; k < g.size(); ++k) os << cx.v[k] << ' ' << cy.v[k] << " 0\n";
  }
  if (!os) throw std::runtime_error("vtk write failed: " + path);
}

}  // namespace vps
