#include "ocm/report.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "json.hpp"

namespace ocm {

namespace {

std::string pct(const Rat& fraction) { return rat_to_fixed(fraction * Rat(100), 2); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string render_report_text(const std::vector<ReportRow>& rows) {
  const std::array<std::string, 7> header = {"workload",       "engine",        "h_b",
                                             "n_ram",          "efficiency_pct", "delta_fps_pct",
                                             "verified"};
  std::vector<std::array<std::string, 7>> cells;
  for (const auto& r : rows)
    cells.push_back({r.workload, r.engine, std::to_string(r.h_b), std::to_string(r.n_ram),
                     pct(r.efficiency), pct(r.delta_fps), r.verified ? "yes" : "no"});
  std::array<std::size_t, 7> width;
  for (std::size_t c = 0; c < 7; ++c) {
    width[c] = header[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::array<std::string, 7>& row) {
    for (std::size_t c = 0; c < 7; ++c) {
      if (c) out << "  ";
      const bool left = c < 2;  // names left-aligned, numbers right-aligned
      if (left) {
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        out << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : cells) emit(row);
  return out.str();
}

std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "workload,engine,h_b,n_ram,efficiency_pct,delta_fps_pct,verified\n";
  for (const auto& r : rows)
    out << csv_escape(r.workload) << ',' << csv_escape(r.engine) << ',' << r.h_b << ','
        << r.n_ram << ',' << pct(r.efficiency) << ',' << pct(r.delta_fps) << ','
        << (r.verified ? "true" : "false") << '\n';
  return out.str();
}

std::string render_report_json(const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    o["workload"] = r.workload;
    o["engine"] = r.engine;
    o["h_b"] = r.h_b;
    o["n_ram"] = r.n_ram;
    o["efficiency_pct"] = pct(r.efficiency);
    o["delta_fps_pct"] = pct(r.delta_fps);
    o["verified"] = r.verified;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

}  // namespace ocm
