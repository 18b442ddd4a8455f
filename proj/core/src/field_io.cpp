#include "kgl/field_io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "kgl/errors.hpp"

namespace kgl {

std::string format_full(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IoFailure", "cannot open " + tmp.string(), kExitSolverFailure);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("IoFailure", "short write to " + tmp.string(), kExitSolverFailure);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error("IoFailure", "rename to " + path + ": " + ec.message(), kExitSolverFailure);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoFailure", "cannot open " + path, kExitSolverFailure);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_to_csv(const RealField& f) {
  std::string out;
  out.reserve(static_cast<std::size_t>(f.grid.sites()) * 20 + 32);
  out += std::to_string(f.grid.dim());
  out += ',';
  out += std::to_string(f.grid.radius());
  out += ',';
  out += to_string(f.grid.boundary());
  out += '\n';
  for (int i = 0; i < f.grid.sites(); ++i) {
    out += format_full(f.values[i]);
    out += '\n';
  }
  return out;
}

void write_field_csv(const std::string& path, const RealField& f) {
  atomic_write_text(path, field_to_csv(f));
}

RealField field_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw ConfigInvalid("field file: missing header");
  int dim = 0, radius = 0;
  std::string bnd;
  {
    std::istringstream hs(header);
    std::string tok;
    if (!std::getline(hs, tok, ',')) throw ConfigInvalid("field header: dim");
    dim = std::stoi(tok);
    if (!std::getline(hs, tok, ',')) throw ConfigInvalid("field header: radius");
    radius = std::stoi(tok);
    if (!std::getline(hs, bnd, ',')) throw ConfigInvalid("field header: boundary");
  }
  LatticeGrid grid(dim, radius, boundary_from_string(bnd));
  RealField f(grid);
  std::string line;
  int i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= grid.sites()) throw ConfigInvalid("field file: too many values");
    double v = 0;
    auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc()) throw ConfigInvalid("field file: bad value '" + line + "'");
    f.values[i++] = v;
  }
  if (i != grid.sites())
    throw ConfigInvalid("field file: expected " + std::to_string(grid.sites()) +
                        " values, got " + std::to_string(i));
  return f;
}

RealField read_field_csv(const std::string& path) { return field_from_csv(read_text(path)); }

}  // namespace kgl
