#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gaugeflow/flow.hpp"
#include "gaugeflow/gauge.hpp"

namespace gaugeflow {

// Shortest text form that round-trips a double exactly.
std::string format_double(double v);

// Minimal comma-separated builder; one instance per file.
class CsvBuilder {
 public:
  CsvBuilder& cell(const std::string& s);
  CsvBuilder& cell(double v);
  CsvBuilder& cell(long long v);
  void end_row();
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
  bool row_open_ = false;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);

// Point matrices use the header x0,...,x{D-1}; 17 significant digits.
void write_point_matrix_csv(const std::filesystem::path& path,
                            const Eigen::MatrixXd& points);
Eigen::MatrixXd read_point_matrix_csv(const std::filesystem::path& path);

// Columns: t, x0..x{D-1}, then logdet, sv0..sv{D-1}, liouville as present.
void write_trajectory_csv(const std::filesystem::path& path,
                          const TrajectoryRecord& rec);

// Columns: t, residual_max, residual_rms, n_points.
void write_gauge_reports_csv(const std::filesystem::path& path,
                             std::span<const GaugeReport> reports);

}  // namespace gaugeflow
