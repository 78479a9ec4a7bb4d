#include "mfginv/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mfginv/errors.hpp"

namespace mfginv {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw InvalidArgument("'" + path.string() + "': bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_spatial_csv(const std::filesystem::path& path, const SpatialField& f) {
  std::string s = "x,value\n";
  for (int i = 0; i < f.size(); ++i) s += format_double(f.grid().x(i)) + ',' + format_double(f[i]) + '\n';
  write_text(path, s);
}

void write_spacetime_csv(const std::filesystem::path& path, const SpaceTimeField& f) {
  const Grid& g = f.grid();
  std::string s = "t,x,value\n";
  for (int n = 0; n < f.levels(); ++n) {
    const std::string prefix = format_double(g.t(n)) + ',';
    for (int i = 0; i < g.nx(); ++i) s += prefix + format_double(g.x(i)) + ',' + format_double(f.at(n, i)) + '\n';
  }
  write_text(path, s);
}

SpatialField read_spatial_csv(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || split(line).size() != 2) throw InvalidArgument("'" + path.string() + "': bad header");
  std::vector<double> values;
  const double scale = std::max(1.0, std::abs(grid.x_lo()) + std::abs(grid.x_hi()));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 2) throw InvalidArgument("'" + path.string() + "': expected two columns");
    const int i = static_cast<int>(values.size());
    if (i >= grid.nx()) throw InvalidArgument("'" + path.string() + "': more rows than grid nodes");
    const double x = parse_double(cells[0], path);
    if (std::abs(x - grid.x(i)) > 1e-9 * scale)
      throw InvalidArgument("'" + path.string() + "': node coordinates do not match the grid");
    values.push_back(parse_double(cells[1], path));
  }
  if (static_cast<int>(values.size()) != grid.nx())
    throw InvalidArgument("'" + path.string() + "': expected " + std::to_string(grid.nx()) + " rows");
  return SpatialField(grid, std::move(values));
}

void write_forward_history_csv(const std::filesystem::path& path, const ForwardResult& r) {
  std::string s = "iter,residual,hjb_fp_solves,elapsed_seconds\n";
  for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
    s += std::to_string(k) + ',' + format_double(r.residual_history[k]) + ',' + std::to_string(k + 1) + ',' +
         format_double(r.elapsed_history[k]) + '\n';
  }
  write_text(path, s);
}

void write_inverse_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history,
                               bool hierarchical) {
  std::string s = "k,meas_rel_err,q_rel_err,forward_residual,hjb_fp_solves_cum,elapsed_seconds";
  s += hierarchical ? ",level,fine_equiv_solves\n" : "\n";
  for (const auto& r : history) {
    s += std::to_string(r.k) + ',' + format_double(r.meas_rel_err) + ',' +
         (r.q_rel_err ? format_double(*r.q_rel_err) : std::string()) + ',' + format_double(r.forward_residual) + ',' +
         std::to_string(r.hjb_fp_solves_cum) + ',' + format_double(r.elapsed_seconds);
    if (hierarchical) s += ',' + std::to_string(r.level) + ',' + format_double(r.fine_equiv_solves);
    s += '\n';
  }
  write_text(path, s);
}

void write_diagnostics_csv(const std::filesystem::path& path, const UpdateDiagnostics& d) {
  const Grid& g = d.correction.grid();
  std::string s = "x,q_minus_qhat,correction,error,pec\n";
  for (int i = 0; i < g.nx(); ++i) {
    s += format_double(g.x(i)) + ',' + format_double(d.q_minus_qhat[i]) + ',' + format_double(d.correction[i]) + ',' +
         format_double(d.error[i]) + ',' + format_double(d.pec[i]) + '\n';
  }
  write_text(path, s);
}

}  // namespace mfginv
