#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
  double threshold = 0.0;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<PrPoint> pr_points;
  std::string ablation;
  std::string split;
  uint64_t seed = 0;
};

// Precision, recall and F1 at a fixed threshold; score >= threshold predicts
// a match. Empty denominators follow the P=0 / R=0 / F1=0 conventions.
inline MetricsReport f1_score(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold = 0.5) {
  if (scores.empty()) throw DegenerateInputError("f1_score on empty input");
  if (scores.size() != labels.size()) {
    throw ConfigError("scores/labels size mismatch: " + std::to_string(scores.size()) + " vs " +
                      std::to_string(labels.size()));
  }
  MetricsReport r;
  r.threshold = threshold;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ConfigError("labels must be 0 or 1, got " + std::to_string(labels[i]));
    }
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    else if (predicted && !actual) ++r.fp;
    else if (!predicted && actual) ++r.fn;
    else ++r.tn;
  }
  r.precision = (r.tp + r.fp) == 0 ? 0.0 : static_cast<double>(r.tp) / (r.tp + r.fp);
  r.recall = (r.tp + r.fn) == 0 ? 0.0 : static_cast<double>(r.tp) / (r.tp + r.fn);
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

// Precision/recall swept over the sorted unique score values (ascending, so
// recall is non-increasing along the curve).
inline std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                                     const std::vector<int>& labels) {
  if (scores.empty()) throw DegenerateInputError("pr_curve on empty input");
  bool any_pos = false, any_neg = false;
  for (int l : labels) {
    if (l == 1) any_pos = true;
    if (l == 0) any_neg = true;
  }
  if (!any_pos || !any_neg) {
    throw DegenerateInputError("pr_curve needs both classes present");
  }
  std::set<double> unique_scores(scores.begin(), scores.end());
  std::vector<PrPoint> points;
  for (double threshold : unique_scores) {
    const MetricsReport r = f1_score(scores, labels, threshold);
    points.push_back(PrPoint{r.precision, r.recall, threshold});
  }
  return points;
}

inline void save_pr_points(std::ostream& out, const std::vector<PrPoint>& points) {
  out << "precision\trecall\tthreshold\n" << std::setprecision(10);
  for (const auto& p : points) {
    out << p.precision << '\t' << p.recall << '\t' << p.threshold << '\n';
  }
}

// Minimal SVG rendering of a P-R curve set; the optional plot artifact.
inline std::string pr_curves_svg(const std::vector<std::pair<std::string, std::vector<PrPoint>>>&
                                     curves) {
  const int size = 420, margin = 40, span = size - 2 * margin;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << size << "' height='" << size
      << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<line x1='" << margin << "' y1='" << size - margin << "' x2='" << size - margin
      << "' y2='" << size - margin << "' stroke='black'/>\n";
  svg << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
      << size - margin << "' stroke='black'/>\n";
  svg << "<text x='" << size / 2 << "' y='" << size - 8 << "' font-size='12'>recall</text>\n";
  svg << "<text x='8' y='" << size / 2 << "' font-size='12' transform='rotate(-90 12 "
      << size / 2 << ")'>precision</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  int idx = 0;
  for (const auto& [name, points] : curves) {
    const char* color = colors[idx % 5];
    svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (const auto& p : points) {
      const double x = margin + p.recall * span;
      const double y = size - margin - p.precision * span;
      svg << x << ',' << y << ' ';
    }
    svg << "'/>\n";
    svg << "<text x='" << size - margin - 120 << "' y='" << margin + 14 * (idx + 1)
        << "' font-size='11' fill='" << color << "'>" << name << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace sgm
