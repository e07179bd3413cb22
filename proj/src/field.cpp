#include "pbf/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pbf {

double TemperatureField::sample(double x, double y, double z) const {
  auto cell = [](double v, double lo, double d, int n) {
    double s = (v - lo) / d;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, n - 2);
    double f = std::clamp(s - i, 0.0, 1.0);
    return std::pair<int, double>{i, f};
  };
  auto [i, fx] = cell(x, grid.origin.x(), grid.dx, grid.nx);
  auto [j, fy] = cell(y, grid.origin.y(), grid.dy, grid.ny);
  auto [k, fz] = cell(z, grid.origin.z(), grid.dz, grid.nz);
  double v = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) * (dk ? fz : 1.0 - fz);
        v += w * at(i + di, j + dj, k + dk);
      }
  return v;
}

namespace {

constexpr char kMagic[4] = {'P', 'B', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

double read_f64(std::ifstream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_field(const TemperatureField& field, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + file.string());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  write_f64(out, field.grid.nx);
  write_f64(out, field.grid.ny);
  write_f64(out, field.grid.nz);
  write_f64(out, field.grid.dx);
  write_f64(out, field.grid.dy);
  write_f64(out, field.grid.dz);
  write_f64(out, field.grid.origin.x());
  write_f64(out, field.grid.origin.y());
  write_f64(out, field.grid.origin.z());
  write_f64(out, field.time);
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

TemperatureField load_field(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a PBFT field file: " + file.string());
  std::uint32_t version;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    throw std::runtime_error("unsupported PBFT version in " + file.string());
  TemperatureField field;
  field.grid.nx = static_cast<int>(read_f64(in));
  field.grid.ny = static_cast<int>(read_f64(in));
  field.grid.nz = static_cast<int>(read_f64(in));
  field.grid.dx = read_f64(in);
  field.grid.dy = read_f64(in);
  field.grid.dz = read_f64(in);
  field.grid.origin.x() = read_f64(in);
  field.grid.origin.y() = read_f64(in);
  field.grid.origin.z() = read_f64(in);
  field.time = read_f64(in);
  field.grid.validate();
  field.values.resize(field.grid.node_count());
  in.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated PBFT file: " + file.string());
  return field;
}

void save_field_csv(const TemperatureField& field, const std::filesystem::path& file) {
  std::FILE* out = std::fopen(file.string().c_str(), "w");
  if (!out) throw std::runtime_error("cannot open for write: " + file.string());
  std::fputs("t,x,y,z,T\n", out);
  const Grid& g = field.grid;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        std::fprintf(out, "%.17g,%.17g,%.17g,%.17g,%.17g\n", field.time, g.x(i), g.y(j), g.z(k),
                     field.at(i, j, k));
  std::fclose(out);
}

}  // namespace pbf
