#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nsact/harness.hpp"

namespace nsact::harness {

using nlohmann::json;
namespace fs = std::filesystem;

ReportFormat parse_report_format(const std::string& name) {
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw HarnessError("unknown report format '" + name + "' (expected md, csv or json)");
}

std::string format_count(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

namespace {

std::string arch_label(nn::Arch a) { return a == nn::Arch::Heavy ? "Heavy" : "Light"; }

std::vector<std::string> dataset_order(const std::vector<RunRecord>& records) {
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.spec.dataset.name) == order.end()) {
      order.push_back(r.spec.dataset.name);
    }
  }
  return order;
}

std::string pm(const metrics::Summary& s) { return format_fixed(s.mean) + " ± " + format_fixed(s.std); }

}  // namespace

std::vector<ReportRow> report_rows(const std::vector<RunRecord>& records) {
  std::vector<ReportRow> rows;
  for (const auto& name : dataset_order(records)) {
    std::vector<ReportRow> group;
    for (const auto& r : records) {
      if (r.spec.dataset.name != name) continue;
      group.push_back({name, arch_label(r.spec.arch), r.spec.activation.label(), r.aggregate, r.status});
    }
    std::stable_sort(group.begin(), group.end(), [](const ReportRow& a, const ReportRow& b) {
      const bool fa = a.status != "ok", fb = b.status != "ok";
      if (fa != fb) return fb;
      return a.aggregate.efficiency.mean < b.aggregate.efficiency.mean;
    });
    rows.insert(rows.end(), group.begin(), group.end());
  }
  return rows;
}

std::vector<SummaryRow> summary_rows(const std::vector<RunRecord>& records) {
  std::vector<SummaryRow> out;
  for (const auto& name : dataset_order(records)) {
    const RunRecord* heavy = nullptr;
    const RunRecord* light = nullptr;
    for (const auto& r : records) {
      if (r.spec.dataset.name != name || r.status != "ok") continue;
      if (r.spec.arch == nn::Arch::Heavy && r.spec.activation.kind == ActivationSource::Kind::Builtin &&
          r.spec.activation.builtin == "relu") {
        heavy = &r;
      } else if (r.spec.arch == nn::Arch::Light &&
                 (!light || r.aggregate.efficiency.mean > light->aggregate.efficiency.mean)) {
        light = &r;
      }
    }
    if (!heavy || !light) continue;
    out.push_back({name, heavy->aggregate.efficiency.mean, light->aggregate.efficiency.mean,
                   light->spec.activation.label(), metrics::improvement(light->aggregate, heavy->aggregate)});
  }
  return out;
}

std::string render_markdown(const std::vector<RunRecord>& records) {
  const auto rows = report_rows(records);
  std::map<std::string, double> best;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    auto [it, inserted] = best.emplace(r.dataset, r.aggregate.efficiency.mean);
    if (!inserted) it->second = std::max(it->second, r.aggregate.efficiency.mean);
  }

  std::ostringstream md;
  md << "## Benchmark\n\n"
     << "| Dataset | Architecture | Activation | Accuracy | AUC | Params | Efficiency |\n"
     << "|---|---|---|---|---|---|---|\n";
  std::size_t max_seeds = 0;
  for (const auto& r : rows) {
    max_seeds = std::max(max_seeds, r.aggregate.n_seeds);
    md << "| " << r.dataset << " | " << r.architecture << " | " << r.activation << " | ";
    if (r.status != "ok") {
      md << "failed | | | |\n";
      continue;
    }
    std::string eff = format_fixed(r.aggregate.efficiency.mean);
    if (r.aggregate.efficiency.mean == best[r.dataset]) eff = "**" + eff + "**";
    md << pm(r.aggregate.accuracy) << " | " << pm(r.aggregate.auc) << " | " << format_count(r.aggregate.params)
       << " | " << eff << " |\n";
  }
  md << "\nMean ± sample standard deviation (n - 1) over up to " << max_seeds
     << " seeds. Efficiency is AUC / log10(params).\n";

  const auto summary = summary_rows(records);
  if (!summary.empty()) {
    md << "\n## Efficiency summary\n\n"
       << "| Dataset | Heavy Efficiency | Best Light Efficiency | Best Light Model | Improvement | Param. Reduction |\n"
       << "|---|---|---|---|---|---|\n";
    for (const auto& s : summary) {
      char gain[32], ratio[32];
      std::snprintf(gain, sizeof gain, "%+.1f%%", s.improvement.efficiency_gain_pct);
      std::snprintf(ratio, sizeof ratio, "%.1f×", s.improvement.param_reduction);
      md << "| " << s.dataset << " | " << format_fixed(s.heavy_efficiency) << " | "
         << format_fixed(s.light_efficiency) << " | " << s.light_label << " | " << gain << " | " << ratio
         << " |\n";
    }
  }
  return md.str();
}

std::string render_csv(const std::vector<RunRecord>& records) {
  std::ostringstream csv;
  csv << "dataset,architecture,activation,accuracy_mean,accuracy_std,auc_mean,auc_std,params,"
         "efficiency_mean,efficiency_std,n_seeds,status\n";
  char buf[512];
  for (const auto& r : report_rows(records)) {
    const auto& a = r.aggregate;
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%zu,%.17g,%.17g,%zu,%s\n", r.dataset.c_str(),
                  r.architecture.c_str(), r.activation.c_str(), a.accuracy.mean, a.accuracy.std, a.auc.mean,
                  a.auc.std, a.params, a.efficiency.mean, a.efficiency.std, a.n_seeds, r.status.c_str());
    csv << buf;
  }
  return csv.str();
}

std::string render_json(const std::vector<RunRecord>& records) {
  json recs = json::array();
  for (const auto& r : records) recs.push_back(to_json(r));
  json summary = json::array();
  for (const auto& s : summary_rows(records)) {
    summary.push_back({{"dataset", s.dataset},
                       {"heavy_efficiency", s.heavy_efficiency},
                       {"light_efficiency", s.light_efficiency},
                       {"light_model", s.light_label},
                       {"efficiency_gain_pct", s.improvement.efficiency_gain_pct},
                       {"param_reduction", s.improvement.param_reduction}});
  }
  json j{{"schema_version", kSchemaVersion}, {"library_version", kLibraryVersion}, {"records", recs},
         {"summary", summary}};
  return j.dump(2) + "\n";
}

std::string render(const std::vector<RunRecord>& records, ReportFormat format) {
  switch (format) {
    case ReportFormat::Markdown: return render_markdown(records);
    case ReportFormat::Csv: return render_csv(records);
    case ReportFormat::Json: break;
  }
  return render_json(records);
}

std::vector<RunRecord> records_from_json(const json& j) {
  std::vector<json> raw;
  if (j.contains("records")) {
    for (const auto& r : j.at("records")) raw.push_back(r);
  } else {
    raw.push_back(j);
  }
  std::vector<RunRecord> out;
  for (const auto& r : raw) out.push_back(run_record_from_json(r));
  return out;
}

std::vector<RunRecord> load_records(const std::vector<fs::path>& paths) {
  std::vector<json> docs;
  std::set<int> versions;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw HarnessError("cannot open " + p.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw HarnessError("cannot parse " + p.string() + ": " + e.what());
    }
    if (j.contains("records")) {
      versions.insert(j.at("schema_version").get<int>());
      for (const auto& r : j.at("records")) versions.insert(r.at("schema_version").get<int>());
    } else {
      versions.insert(j.at("schema_version").get<int>());
    }
    docs.push_back(std::move(j));
  }
  if (versions.size() > 1) throw HarnessError("mixed schema versions in report inputs");
  std::vector<RunRecord> out;
  for (const auto& j : docs) {
    auto recs = records_from_json(j);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

void cmd_report(const std::vector<fs::path>& inputs, ReportFormat format, const std::string& out) {
  const std::string text = render(load_records(inputs), format);
  if (out.empty() || out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw HarnessError("cannot write " + out);
  f << text;
}

}  // namespace nsact::harness
