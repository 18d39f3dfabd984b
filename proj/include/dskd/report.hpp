#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "dskd/common.hpp"

namespace dskd {

// Records every artifact a run writes, with byte size and content hash, and
// echoes the run configuration. Written as JSON at the end of the run.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  void set_config(const std::map<std::string, std::string>& kv) {
    config_ = kv;
  }
  // Hashes the file as it exists on disk; call after the file is final.
  void record(const std::string& path);
  void write(const std::string& path) const;  // records itself last

  const std::vector<std::string>& artifacts() const { return paths_; }

 private:
  std::string command_;
  std::map<std::string, std::string> config_;
  std::vector<std::string> paths_;
  std::vector<u64> hashes_;
  std::vector<u64> sizes_;
};

// ---------------------------------------------------------------------------
// Self-contained SVG charts (no plotting dependency).
// ---------------------------------------------------------------------------
struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<ChartSeries>& series);

struct ScatterPoint {
  double x = 0, y = 0;
  int cls = 0;
  std::string label;  // optional
};

void svg_scatter(const std::string& path, const std::string& title,
                 const std::vector<ScatterPoint>& points);

// Top-2 principal-component projection (power iteration with deflation).
Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& rows);

// One-sided sign test: P[X >= wins] for X ~ Binomial(wins + losses, 1/2).
// Ties are excluded by the caller.
double sign_test_p(int wins, int losses);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dskd
