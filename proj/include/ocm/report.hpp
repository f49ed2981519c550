#pragma once

#include <string>
#include <vector>

#include "ocm/rational.hpp"

namespace ocm {

// One comparison-table row. Multi-island runs contribute one sub-row per
// island (workload "name:island") followed by a total row.
struct ReportRow {
  std::string workload;
  std::string engine;
  std::int64_t h_b = 0;
  std::int64_t n_ram = 0;
  Rat efficiency{0};  // fraction of allocated bits in use, in [0, 1]
  Rat delta_fps{0};   // relative throughput reduction versus the base clock
  bool verified = false;
};

std::string render_report_text(const std::vector<ReportRow>& rows);
std::string render_report_csv(const std::vector<ReportRow>& rows);
std::string render_report_json(const std::vector<ReportRow>& rows);

}  // namespace ocm
