#include "gaugeflow/csv.hpp"

#include <Eigen/SVD>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gaugeflow {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvBuilder& CsvBuilder::cell(const std::string& s) {
  if (row_open_) buf_ += ',';
  buf_ += s;
  row_open_ = true;
  return *this;
}

CsvBuilder& CsvBuilder::cell(double v) { return cell(format_double(v)); }

CsvBuilder& CsvBuilder::cell(long long v) { return cell(std::to_string(v)); }

void CsvBuilder::end_row() {
  buf_ += '\n';
  row_open_ = false;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_point_matrix_csv(const std::filesystem::path& path,
                            const Eigen::MatrixXd& points) {
  CsvBuilder csv;
  for (Eigen::Index j = 0; j < points.cols(); ++j)
    csv.cell("x" + std::to_string(j));
  csv.end_row();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) csv.cell(points(i, j));
    csv.end_row();
  }
  write_text_file(path, csv.str());
}

Eigen::MatrixXd read_point_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty CSV: " + path.string());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cellstr;
    while (std::getline(ss, cellstr, ',')) row.push_back(std::stod(cellstr));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged CSV: " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const TrajectoryRecord& rec) {
  const int D = static_cast<int>(rec.states.front().size());
  CsvBuilder csv;
  csv.cell("t");
  for (int j = 0; j < D; ++j) csv.cell("x" + std::to_string(j));
  if (rec.has_logdet) csv.cell("logdet");
  if (rec.has_Y)
    for (int j = 0; j < D; ++j) csv.cell("sv" + std::to_string(j));
  if (rec.has_liouville) csv.cell("liouville");
  csv.end_row();
  for (std::size_t i = 0; i < rec.checkpoints.size(); ++i) {
    csv.cell(rec.checkpoints[i]);
    for (int j = 0; j < D; ++j) csv.cell(rec.states[i][j]);
    if (rec.has_logdet) csv.cell(rec.logdet[i]);
    if (rec.has_Y) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(rec.Y[i]);
      for (int j = 0; j < D; ++j) csv.cell(svd.singularValues()[j]);
    }
    if (rec.has_liouville) csv.cell(rec.liouville[i]);
    csv.end_row();
  }
  write_text_file(path, csv.str());
}

void write_gauge_reports_csv(const std::filesystem::path& path,
                             std::span<const GaugeReport> reports) {
  CsvBuilder csv;
  csv.cell("t").cell("residual_max").cell("residual_rms").cell("n_points");
  csv.end_row();
  for (const auto& r : reports) {
    csv.cell(r.t).cell(r.residual_max).cell(r.residual_rms);
    csv.cell(static_cast<long long>(r.n_points));
    csv.end_row();
  }
  write_text_file(path, csv.str());
}

}  // namespace gaugeflow
