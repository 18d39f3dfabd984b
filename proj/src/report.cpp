#include "dskd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace dskd {

using nlohmann::json;

void RunManifest::record(const std::string& path) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec) throw io_error("manifest: cannot stat " + path);
  paths_.push_back(path);
  sizes_.push_back(static_cast<u64>(size));
  hashes_.push_back(fnv1a64_file(path));
}

void RunManifest::write(const std::string& path) const {
  json j;
  j["command"] = command_;
  j["config"] = config_;
  j["artifacts"] = json::array();
  char hex[32];
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hashes_[i]));
    j["artifacts"].push_back({{"path", paths_[i]},
                              {"bytes", sizes_[i]},
                              {"fnv1a64", std::string(hex)}});
  }
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// SVG output
// ---------------------------------------------------------------------------

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Range {
  double lo = 0, hi = 1;
  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double map(double v, double a, double b) const {
    if (hi == lo) return (a + b) / 2;
    return a + (v - lo) / (hi - lo) * (b - a);
  }
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<ChartSeries>& series) {
  Range xr, yr;
  bool first = true;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        xr.lo = xr.hi = x;
        yr.lo = yr.hi = y;
        first = false;
      }
      xr.widen(x);
      yr.widen(y);
    }
  if (yr.hi == yr.lo) {
    yr.lo -= 0.5;
    yr.hi += 0.5;
  }
  if (xr.hi == xr.lo) {
    xr.lo -= 0.5;
    xr.hi += 0.5;
  }

  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  const double x0 = kMarginL, x1 = kW - kMarginR;
  const double y0 = kH - kMarginB, y1 = kMarginT;  // y grows downward
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
     << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
     << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    double fx = xr.lo + (xr.hi - xr.lo) * tick / 4.0;
    double fy = yr.lo + (yr.hi - yr.lo) * tick / 4.0;
    double px = xr.map(fx, x0, x1);
    double py = yr.map(fy, y0, y1);
    os << "<text x=\"" << px << "\" y=\"" << y0 + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(fx) << "</text>\n";
    os << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(fy) << "</text>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << py << "\" x2=\"" << x1
       << "\" y2=\"" << py << "\" stroke=\"#dddddd\"/>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (y0 + y1) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\" transform=\"rotate(-90 16 "
     << (y0 + y1) / 2 << ")\">" << ylabel << "</text>\n";

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kPalette[ci % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : s.points)
      os << xr.map(x, x0, x1) << "," << yr.map(y, y0, y1) << " ";
    os << "\"/>\n";
    for (auto [x, y] : s.points)
      os << "<circle cx=\"" << xr.map(x, x0, x1) << "\" cy=\""
         << yr.map(y, y0, y1) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << x1 - 6 << "\" y=\"" << y1 + 16 + 16 * ci
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
          "fill=\""
       << color << "\">" << s.name << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
}

void svg_scatter(const std::string& path, const std::string& title,
                 const std::vector<ScatterPoint>& points) {
  Range xr, yr;
  bool first = true;
  for (const auto& p : points) {
    if (first) {
      xr.lo = xr.hi = p.x;
      yr.lo = yr.hi = p.y;
      first = false;
    }
    xr.widen(p.x);
    yr.widen(p.y);
  }
  if (xr.hi == xr.lo) xr.hi = xr.lo + 1;
  if (yr.hi == yr.lo) yr.hi = yr.lo + 1;

  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  const double x0 = kMarginL, x1 = kW - kMarginR;
  const double y0 = kH - kMarginB, y1 = kMarginT;
  for (const auto& p : points) {
    const char* color = kPalette[((p.cls % 8) + 8) % 8];
    os << "<circle cx=\"" << xr.map(p.x, x0, x1) << "\" cy=\""
       << yr.map(p.y, y0, y1) << "\" r=\"3\" fill=\"" << color
       << "\" fill-opacity=\"0.7\"/>\n";
    if (!p.label.empty())
      os << "<text x=\"" << xr.map(p.x, x0, x1) + 5 << "\" y=\""
         << yr.map(p.y, y0, y1) - 4
         << "\" font-family=\"sans-serif\" font-size=\"9\">" << p.label
         << "</text>\n";
  }
  os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  if (n == 0) return Eigen::MatrixXd(0, 2);
  Eigen::RowVectorXd mean = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / std::max(1, n - 1);

  auto power_iterate = [&](const Eigen::MatrixXd& m) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows()).normalized();
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd w = m * v;
      double norm = w.norm();
      if (norm < 1e-300) break;
      w /= norm;
      if ((w - v).norm() < 1e-12) {
        v = w;
        break;
      }
      v = w;
    }
    return v;
  };

  Eigen::VectorXd p1 = power_iterate(cov);
  double l1 = p1.dot(cov * p1);
  Eigen::MatrixXd deflated = cov - l1 * p1 * p1.transpose();
  Eigen::VectorXd p2 = power_iterate(deflated);

  Eigen::MatrixXd out(n, 2);
  out.col(0) = centered * p1;
  out.col(1) = centered * p2;
  return out;
}

double sign_test_p(int wins, int losses) {
  if (wins < 0 || losses < 0)
    throw validation_error("sign_test_p: negative counts");
  const int n = wins + losses;
  if (n == 0) return 1.0;
  // P[X >= wins], X ~ Binomial(n, 1/2); exact with log-gamma for stability.
  double p = 0.0;
  for (int i = wins; i <= n; ++i) {
    double log_c = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                   std::lgamma(n - i + 1.0);
    p += std::exp(log_c - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << content;
  if (!os) throw io_error("write failed: " + path);
}

}  // namespace dskd
