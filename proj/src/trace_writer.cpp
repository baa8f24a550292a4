#include "fcs/trace_writer.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace fcs {

std::string format_number(double v) {
  if (v == 0.0)
    return "0"; // also folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const RunResult &r) {
  std::string out = "t_s,y_kwh,p_pv_kw,p_s_kw,p_g_kw,p_total_kw";
  for (const auto &id : r.session_ids)
    out += ",ref_" + id + "_kw,p_" + id + "_kw,x_" + id + "_kwh";
  out += '\n';
  for (const auto &row : r.logs) {
    out += format_number(row.t_s);
    for (double v : {row.y_kwh, row.p_pv_kw, row.p_s_kw, row.p_g_kw, row.p_total_kw}) {
      out += ',';
      out += format_number(v);
    }
    for (const auto &s : row.sessions) {
      out += ',' + format_number(s.ref_kw);
      out += ',' + format_number(s.p_kw);
      out += ',' + format_number(s.x_kwh);
    }
    out += '\n';
  }
  return out;
}

std::string summary_csv(const RunResult &r) {
  auto opt = [](const std::optional<double> &v) { return v ? format_number(*v) : std::string(); };
  std::string out = "id,plug_kw,t_arr_s,t_connect_s,t_complete_s,t_leave_s,energy_kwh\n";
  for (const auto &s : r.summary) {
    out += s.id + ',' + format_number(s.plug_kw) + ',' + format_number(s.t_arr_s) + ',' +
           opt(s.t_connect_s) + ',' + opt(s.t_complete_s) + ',' + opt(s.t_leave_s) + ',' +
           format_number(s.energy_kwh) + '\n';
  }
  return out;
}

namespace {
void write_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out)
    throw std::runtime_error("failed writing '" + path.string() + "'");
}
} // namespace

void write_logs(const RunResult &r, const std::filesystem::path &out_dir) {
  if (r.logs.empty())
    throw std::runtime_error("write_logs: nothing to write");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());
  write_file(out_dir / "trace.csv", trace_csv(r));
  write_file(out_dir / "summary.csv", summary_csv(r));
}

} // namespace fcs
