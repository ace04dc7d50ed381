#include "zsl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace zsl::eval {

bool operator==(const EvalReport& a, const EvalReport& b) {
  return a.per_class_acc == b.per_class_acc && a.top1_zsl == b.top1_zsl &&
         a.acc_ts == b.acc_ts && a.acc_tr == b.acc_tr &&
         a.harmonic_mean == b.harmonic_mean &&
         a.config_digest == b.config_digest && a.seed == b.seed;
}

double per_class_accuracy(const std::vector<int>& predictions,
                          const std::vector<int>& truths,
                          const std::vector<int>& classes) {
  if (predictions.size() != truths.size()) {
    throw ValidationError("per_class_accuracy: prediction/truth length mismatch");
  }
  if (classes.empty()) {
    throw ValidationError("per_class_accuracy: empty class list");
  }
  std::map<int, std::pair<long long, long long>> counts;  // class -> (correct, total)
  for (int c : classes) counts[c] = {0, 0};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    auto it = counts.find(truths[i]);
    if (it == counts.end()) {
      throw ValidationError("per_class_accuracy: truth label " +
                            std::to_string(truths[i]) +
                            " is not in the class list");
    }
    ++it->second.second;
    if (predictions[i] == truths[i]) ++it->second.first;
  }
  double sum = 0.0;
  for (const auto& [c, cnt] : counts) {
    if (cnt.second == 0) {
      throw ValidationError("per_class_accuracy: class " + std::to_string(c) +
                            " has zero samples; per-class accuracy is undefined");
    }
    sum += static_cast<double>(cnt.first) / cnt.second;
  }
  return sum / counts.size();
}

double harmonic(double ts, double tr) {
  if (ts < 0.0 || ts > 1.0 || tr < 0.0 || tr > 1.0) {
    throw ValidationError("harmonic: accuracies must lie in [0,1]");
  }
  if (ts + tr <= 0.0) return 0.0;
  return 2.0 * ts * tr / (ts + tr);
}

namespace {

std::vector<int> predict_all(const Recognizer& recognizer, const Dataset& ds,
                             const std::vector<int>& instance_indices,
                             const std::vector<int>& candidates) {
  std::vector<int> preds;
  preds.reserve(instance_indices.size());
  for (int i : instance_indices) {
    preds.push_back(recognizer(row(ds.features, i), candidates));
  }
  return preds;
}

std::vector<int> truths_of(const Dataset& ds, const std::vector<int>& idx) {
  std::vector<int> t;
  t.reserve(idx.size());
  for (int i : idx) t.push_back(ds.labels[i]);
  return t;
}

void fill_per_class(EvalReport& report, const std::vector<int>& preds,
                    const std::vector<int>& truths,
                    const std::vector<int>& classes) {
  std::map<int, std::pair<long long, long long>> counts;
  for (int c : classes) counts[c] = {0, 0};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++counts[truths[i]].second;
    if (preds[i] == truths[i]) ++counts[truths[i]].first;
  }
  for (const auto& [c, cnt] : counts) {
    report.per_class_acc[c] = static_cast<double>(cnt.first) / cnt.second;
  }
}

}  // namespace

EvalReport eval_zsl(const Recognizer& recognizer, const Dataset& ds) {
  ds.validate();
  if (ds.test_unseen_indices.empty()) {
    throw ValidationError("eval_zsl: test_unseen split is empty");
  }
  std::vector<int> preds =
      predict_all(recognizer, ds, ds.test_unseen_indices, ds.unseen_classes);
  std::vector<int> truths = truths_of(ds, ds.test_unseen_indices);
  EvalReport report;
  report.top1_zsl = per_class_accuracy(preds, truths, ds.unseen_classes);
  fill_per_class(report, preds, truths, ds.unseen_classes);
  return report;
}

EvalReport eval_gzsl(const Recognizer& recognizer, const Dataset& ds) {
  ds.validate();
  if (ds.test_unseen_indices.empty()) {
    throw ValidationError("eval_gzsl: test_unseen split is empty");
  }
  if (ds.test_seen_indices.empty()) {
    throw ValidationError(
        "eval_gzsl: dataset has no test_seen split; the seen-class accuracy "
        "tr is undefined");
  }
  std::vector<int> all_classes(ds.num_classes());
  for (int c = 0; c < ds.num_classes(); ++c) all_classes[c] = c;

  std::vector<int> preds_unseen =
      predict_all(recognizer, ds, ds.test_unseen_indices, all_classes);
  std::vector<int> truths_unseen = truths_of(ds, ds.test_unseen_indices);
  std::vector<int> preds_seen =
      predict_all(recognizer, ds, ds.test_seen_indices, all_classes);
  std::vector<int> truths_seen = truths_of(ds, ds.test_seen_indices);

  EvalReport report;
  report.acc_ts =
      per_class_accuracy(preds_unseen, truths_unseen, ds.unseen_classes);
  report.acc_tr = per_class_accuracy(preds_seen, truths_seen, ds.seen_classes);
  report.harmonic_mean = harmonic(*report.acc_ts, *report.acc_tr);
  fill_per_class(report, preds_unseen, truths_unseen, ds.unseen_classes);
  fill_per_class(report, preds_seen, truths_seen, ds.seen_classes);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& [c, acc] : report.per_class_acc) {
    j["per_class"].push_back({{"class", c}, {"acc", acc}});
  }
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["top1_zsl"] = opt(report.top1_zsl);
  j["ts"] = opt(report.acc_ts);
  j["tr"] = opt(report.acc_tr);
  j["H"] = opt(report.harmonic_mean);
  j["seed"] = report.seed;
  j["config_digest"] = report.config_digest;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  EvalReport report;
  for (const auto& entry : j.at("per_class")) {
    report.per_class_acc[entry.at("class").get<int>()] =
        entry.at("acc").get<double>();
  }
  auto opt = [&](const char* key) -> std::optional<double> {
    if (j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  report.top1_zsl = opt("top1_zsl");
  report.acc_ts = opt("ts");
  report.acc_tr = opt("tr");
  report.harmonic_mean = opt("H");
  report.seed = j.at("seed").get<std::uint64_t>();
  report.config_digest = j.at("config_digest").get<std::string>();
  return report;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "class,acc\n";
  char buf[64];
  for (const auto& [c, acc] : report.per_class_acc) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f\n", c, acc);
    out += buf;
  }
  return out;
}

std::string report_to_svg(const EvalReport& report) {
  const int bar_w = 28, gap = 8, plot_h = 220;
  const int margin_left = 48, margin_top = 36, margin_bottom = 40;
  int n = static_cast<int>(report.per_class_acc.size());
  int width = margin_left + n * (bar_w + gap) + gap + 16;
  int height = margin_top + plot_h + margin_bottom;

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(margin_left) +
         "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
         "per-class accuracy</text>\n";
  // Axis and 100% reference line.
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                "stroke=\"black\"/>\n",
                margin_left, margin_top + plot_h, width - 8, margin_top + plot_h);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                "stroke=\"#cccccc\" stroke-dasharray=\"4 3\"/>\n",
                margin_left, margin_top, width - 8, margin_top);
  svg += buf;
  int x = margin_left + gap;
  for (const auto& [c, acc] : report.per_class_acc) {
    int h = static_cast<int>(acc * plot_h + 0.5);
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                  "fill=\"#4878a8\"/>\n",
                  x, margin_top + plot_h - h, bar_w, h);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"10\" text-anchor=\"middle\">%.1f</text>\n",
                  x + bar_w / 2, margin_top + plot_h - h - 4, acc * 100.0);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"10\" text-anchor=\"middle\">%d</text>\n",
                  x + bar_w / 2, margin_top + plot_h + 16, c);
    svg += buf;
    x += bar_w + gap;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

void emit_report(const EvalReport& report, const std::string& dir,
                 const std::string& basename,
                 const std::set<ReportFormat>& formats) {
  fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  if (formats.count(ReportFormat::json)) {
    write_text(root / (basename + ".json"), report_to_json(report));
  }
  if (formats.count(ReportFormat::csv)) {
    write_text(root / (basename + ".csv"), report_to_csv(report));
  }
  if (formats.count(ReportFormat::svg)) {
    write_text(root / (basename + ".svg"), report_to_svg(report));
  }
}

}  // namespace zsl::eval
