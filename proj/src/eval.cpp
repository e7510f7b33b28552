#include "ssllab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "ssllab/ops.hpp"

namespace ssllab {

int64_t MetricsReport::total_count() const {
  int64_t n = 0;
  for (const auto& row : confusion)
    for (int64_t v : row) n += v;
  return n;
}

MetricsReport evaluate_indices(ModelParams& params, const Dataset& ds,
                               const std::vector<int>& indices,
                               const std::vector<int>& cluster,
                               int background_index) {
  if (indices.empty())
    throw std::invalid_argument("evaluate: no samples to score");
  const int C = params.config().num_classes;
  if (C != ds.num_classes())
    throw std::invalid_argument(
        "evaluate: model has " + std::to_string(C) + " classes but dataset " +
        std::to_string(ds.num_classes()));

  MetricsReport report;
  report.class_names = ds.class_names;
  report.confusion.assign(size_t(C), std::vector<int64_t>(size_t(C), 0));
  report.cluster = cluster;
  report.background_index = background_index;
  report.background_included = background_index >= 0;

  std::vector<uint8_t> in_cluster(size_t(C), 0);
  for (int c : cluster) in_cluster[size_t(c)] = 1;

  const int H = ds.spec.image_h, W = ds.spec.image_w;
  constexpr int kBatch = 64;
  NoGradGuard no_grad;
  for (size_t pos = 0; pos < indices.size(); pos += kBatch) {
    const int b = int(std::min(size_t(kBatch), indices.size() - pos));
    std::vector<float> pixels(size_t(b) * H * W);
    for (int i = 0; i < b; ++i) {
      const auto& img = ds.samples[size_t(indices[pos + size_t(i)])].image;
      std::copy(img.pixels.begin(), img.pixels.end(),
                pixels.begin() + size_t(i) * H * W);
    }
    Tensor batch = Tensor::from_data({b, 1, H, W}, std::move(pixels));
    Tensor logits = model_forward(params, batch, /*train=*/false);
    const auto preds = argmax_rows(logits);
    for (int i = 0; i < b; ++i) {
      const int truth = ds.samples[size_t(indices[pos + size_t(i)])].label;
      report.confusion[size_t(truth)][size_t(preds[size_t(i)])]++;
    }
  }

  int64_t anat_total = 0, anat_correct = 0, grouped_correct = 0;
  report.per_class_recall.assign(size_t(C), std::nullopt);
  for (int t = 0; t < C; ++t) {
    int64_t row_total = 0;
    for (int p = 0; p < C; ++p) row_total += report.confusion[size_t(t)][size_t(p)];
    if (row_total > 0)
      report.per_class_recall[size_t(t)] =
          double(report.confusion[size_t(t)][size_t(t)]) / double(row_total);
    if (t == background_index) continue;
    anat_total += row_total;
    anat_correct += report.confusion[size_t(t)][size_t(t)];
    for (int p = 0; p < C; ++p) {
      const bool correct =
          p == t || (in_cluster[size_t(t)] && in_cluster[size_t(p)]);
      if (correct) grouped_correct += report.confusion[size_t(t)][size_t(p)];
    }
  }
  if (anat_total == 0)
    throw std::invalid_argument("evaluate: no anatomical samples to score");
  report.overall_accuracy_anatomical = double(anat_correct) / double(anat_total);
  report.grouped_cluster_accuracy = double(grouped_correct) / double(anat_total);
  return report;
}

MetricsReport evaluate(ModelParams& params, const Dataset& test,
                       const std::vector<int>& cluster, int background_index) {
  return evaluate_indices(params, test, test.split_indices(Split::test),
                          cluster, background_index);
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void to_json_report(nlohmann::json& j, const MetricsReport& r) {
  nlohmann::json recall = nlohmann::json::array();
  for (const auto& v : r.per_class_recall) {
    if (v.has_value()) recall.push_back(*v);
    else recall.push_back(nullptr);
  }
  j = {{"class_names", r.class_names},
       {"confusion", r.confusion},
       {"overall_accuracy_anatomical", r.overall_accuracy_anatomical},
       {"grouped_cluster_accuracy", r.grouped_cluster_accuracy},
       {"per_class_recall", recall},
       {"background_included", r.background_included},
       {"cluster", r.cluster},
       {"background_index", r.background_index}};
}

}  // namespace

void export_report(const MetricsReport& report,
                   const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw std::runtime_error("export: cannot create directory " + dir.string());

  const int C = int(report.class_names.size());
  {
    std::ofstream csv(dir / "confusion.csv");
    if (!csv) throw std::runtime_error("export: cannot write confusion.csv");
    csv << "truth\\pred";
    for (const auto& n : report.class_names) csv << "," << n;
    csv << "\n";
    for (int t = 0; t < C; ++t) {
      csv << report.class_names[size_t(t)];
      for (int p = 0; p < C; ++p) csv << "," << report.confusion[size_t(t)][size_t(p)];
      csv << "\n";
    }
  }
  {
    nlohmann::json j;
    to_json_report(j, report);
    std::ofstream os(dir / "summary.json");
    if (!os) throw std::runtime_error("export: cannot write summary.json");
    os << j.dump(2) << "\n";
  }

  // confusion heatmap: one rect per matrix entry
  {
    const int cell = 18, margin = 110;
    const int size = margin + C * cell + 10;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
        << "\" height=\"" << size << "\">\n";
    int64_t maxv = 1;
    for (const auto& row : report.confusion)
      for (int64_t v : row) maxv = std::max(maxv, v);
    for (int t = 0; t < C; ++t) {
      for (int p = 0; p < C; ++p) {
        const double f =
            double(report.confusion[size_t(t)][size_t(p)]) / double(maxv);
        const int shade = int(255.0 - 215.0 * f);
        svg << "<rect x=\"" << margin + p * cell << "\" y=\""
            << margin + t * cell << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" "
            << "stroke=\"white\"/>\n";
      }
    }
    for (int t = 0; t < C; ++t) {
      svg << "<text x=\"" << margin - 4 << "\" y=\""
          << margin + t * cell + cell - 5
          << "\" font-size=\"9\" text-anchor=\"end\">"
          << report.class_names[size_t(t)] << "</text>\n";
      svg << "<text x=\"" << margin + t * cell + 3 << "\" y=\"" << margin - 6
          << "\" font-size=\"9\" transform=\"rotate(-60 "
          << margin + t * cell + 3 << " " << margin - 6 << ")\">"
          << report.class_names[size_t(t)] << "</text>\n";
    }
    svg << "</svg>\n";
    std::ofstream os(dir / "confusion.svg");
    if (!os) throw std::runtime_error("export: cannot write confusion.svg");
    os << svg.str();
  }

  // accuracy bars: aggregate scores then per-class recalls
  {
    struct Bar {
      std::string name;
      double value;
    };
    std::vector<Bar> bars{{"overall", report.overall_accuracy_anatomical},
                          {"grouped", report.grouped_cluster_accuracy}};
    for (int c = 0; c < C; ++c)
      if (report.per_class_recall[size_t(c)].has_value())
        bars.push_back({report.class_names[size_t(c)],
                        *report.per_class_recall[size_t(c)]});
    const int bar_w = 22, gap = 6, height = 220, base = 170, margin = 40;
    const int width = margin + int(bars.size()) * (bar_w + gap) + 10;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    for (size_t i = 0; i < bars.size(); ++i) {
      const int h = int(150.0 * bars[i].value);
      const int x = margin + int(i) * (bar_w + gap);
      svg << "<rect x=\"" << x << "\" y=\"" << base - h << "\" width=\""
          << bar_w << "\" height=\"" << h << "\" fill=\""
          << (i < 2 ? "rgb(200,60,60)" : "rgb(70,110,200)") << "\"/>\n";
      svg << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base - h - 4
          << "\" font-size=\"8\" text-anchor=\"middle\">"
          << fmt_double(std::round(bars[i].value * 1000.0) / 1000.0)
          << "</text>\n";
      svg << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base + 10
          << "\" font-size=\"7\" text-anchor=\"middle\" transform=\"rotate(45 "
          << x + bar_w / 2 << " " << base + 10 << ")\">" << bars[i].name
          << "</text>\n";
    }
    svg << "</svg>\n";
    std::ofstream os(dir / "accuracy_bars.svg");
    if (!os) throw std::runtime_error("export: cannot write accuracy_bars.svg");
    os << svg.str();
  }
}

std::vector<ComparisonRow> compare_runs(const std::vector<RunScore>& scores) {
  if (scores.size() < 2)
    throw ComparisonError("compare: need at least two runs");
  const uint64_t hash = scores.front().dataset_hash;
  for (const auto& s : scores)
    if (s.dataset_hash != hash)
      throw ComparisonError(
          "compare: runs evaluate different datasets (test-set hash " +
          std::to_string(s.dataset_hash) + " vs " + std::to_string(hash) +
          ")");

  std::map<std::pair<int, bool>, std::vector<const RunScore*>> cells;
  for (const auto& s : scores)
    cells[{s.labelled_per_class, s.include_background}].push_back(&s);

  std::vector<ComparisonRow> rows;
  for (const auto& [key, runs] : cells) {
    ComparisonRow row;
    row.labelled_per_class = key.first;
    row.include_background = key.second;
    double sup_o = 0, sup_g = 0, ssl_o = 0, ssl_g = 0;
    for (const auto* r : runs) {
      if (r->mode == "supervised") {
        row.supervised_runs++;
        sup_o += r->overall;
        sup_g += r->grouped;
      } else {
        row.ssl_runs++;
        ssl_o += r->overall;
        ssl_g += r->grouped;
      }
    }
    if (row.supervised_runs == 0 || row.ssl_runs == 0) continue;
    row.supervised_overall = sup_o / row.supervised_runs;
    row.supervised_grouped = sup_g / row.supervised_runs;
    row.ssl_overall = ssl_o / row.ssl_runs;
    row.ssl_grouped = ssl_g / row.ssl_runs;
    row.delta_overall = row.ssl_overall - row.supervised_overall;
    row.delta_grouped = row.ssl_grouped - row.supervised_grouped;
    row.detrimental = row.delta_overall < 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "labelled_per_class,background,supervised_overall,ssl_overall,"
        "delta_overall,supervised_grouped,ssl_grouped,delta_grouped,"
        "detrimental\n";
  for (const auto& r : rows) {
    os << r.labelled_per_class << "," << (r.include_background ? 1 : 0) << ","
       << fmt_double(r.supervised_overall) << "," << fmt_double(r.ssl_overall)
       << "," << fmt_double(r.delta_overall) << ","
       << fmt_double(r.supervised_grouped) << "," << fmt_double(r.ssl_grouped)
       << "," << fmt_double(r.delta_grouped) << ","
       << (r.detrimental ? 1 : 0) << "\n";
  }
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "labels  bg   sup_overall  ssl_overall  delta      sup_grouped  "
        "ssl_grouped  delta\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-7d %-4s %-12.4f %-12.4f %+-10.4f %-12.4f %-12.4f %+.4f%s\n",
                  r.labelled_per_class, r.include_background ? "yes" : "no",
                  r.supervised_overall, r.ssl_overall, r.delta_overall,
                  r.supervised_grouped, r.ssl_grouped, r.delta_grouped,
                  r.detrimental ? "  [detrimental]" : "");
    os << buf;
  }
  return os.str();
}

}  // namespace ssllab
