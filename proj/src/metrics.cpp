#include "ogb/metrics.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "ogb/util/numfmt.hpp"

namespace ogb::metrics {

using lexicon::GenderClass;
using nlohmann::json;

namespace {

constexpr int kValueDigits = 4;    // significant digits for OGB values
constexpr int kPercentDecimals = 2;

const GenderClass kAllGenders[] = {GenderClass::Neutral, GenderClass::Feminine,
                                   GenderClass::Masculine};

GroupSummary means_from_pairs(
    const std::vector<std::pair<GenderClass, double>>& pairs,
    std::string model_id, std::string corpus_id) {
  if (pairs.empty()) {
    raise(ErrorKind::EmptyInput, "no scored instances to aggregate");
  }
  std::map<GenderClass, std::pair<double, std::size_t>> acc;
  for (const auto& [gender, ogb] : pairs) {
    auto& [sum, count] = acc[gender];
    sum += ogb;
    ++count;
  }
  GroupSummary summary;
  summary.model_id = std::move(model_id);
  summary.corpus_id = std::move(corpus_id);
  for (GenderClass g : kAllGenders) {
    auto it = acc.find(g);
    if (it == acc.end()) {
      raise(ErrorKind::MissingGenderClass,
            std::string("no scored instances with gender '") +
                lexicon::to_string(g) + "'");
    }
    summary.by_gender[g] = GroupStats{
        it->second.first / static_cast<double>(it->second.second),
        it->second.second};
  }
  return summary;
}

}  // namespace

GroupSummary group_means(const std::vector<scorer::ScoredInstance>& scored,
                         const std::string& model_id,
                         const std::string& corpus_id) {
  std::vector<std::pair<GenderClass, double>> pairs;
  pairs.reserve(scored.size());
  for (const auto& s : scored) pairs.emplace_back(s.instance.gender, s.ogb);
  return means_from_pairs(pairs, model_id, corpus_id);
}

GroupSummary group_means(const std::vector<scorer::ScoredRecord>& records,
                         const std::string& corpus_id) {
  std::vector<std::pair<GenderClass, double>> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) pairs.emplace_back(r.gender, r.ogb);
  const std::string model_id = records.empty() ? "" : records.front().model_id;
  return means_from_pairs(pairs, model_id, corpus_id);
}

double percent_change(double baseline_value, double debiased_value) {
  if (baseline_value == 0.0) {
    raise(ErrorKind::ZeroBaseline,
          "percent change is undefined for a zero baseline");
  }
  return (std::fabs(baseline_value) - std::fabs(debiased_value)) /
         std::fabs(baseline_value) * 100.0;
}

double mean_percent_change(const std::vector<double>& values) {
  if (values.empty()) {
    raise(ErrorKind::EmptyInput, "mean of no percent changes");
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

BiasReport make_report(
    GroupSummary baseline,
    const std::vector<std::pair<std::string, GroupSummary>>& methods) {
  BiasReport report;
  report.baseline = std::move(baseline);
  for (const auto& [name, summary] : methods) {
    MethodRow row;
    row.name = name;
    row.summary = summary;
    std::vector<double> percents;
    for (GenderClass g : kAllGenders) {
      const double pc = percent_change(report.baseline.by_gender.at(g).mean_ogb,
                                       summary.by_gender.at(g).mean_ogb);
      row.percent_change_by_gender[g] = pc;
      percents.push_back(pc);
    }
    row.mean_percent_change = mean_percent_change(percents);
    report.methods.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string value_cell(double v) { return numfmt::significant(v, kValueDigits); }
std::string percent_cell(double v) { return numfmt::fixed(v, kPercentDecimals); }

std::string render_table(const BiasReport& report) {
  const bool percents = !report.methods.empty();
  std::vector<std::vector<std::string>> rows;

  std::vector<std::string> header{"Method"};
  for (GenderClass g : kAllGenders) {
    std::string label = lexicon::to_string(g);
    label[0] = static_cast<char>(std::toupper(label[0]));
    header.push_back(label);
    if (percents) header.push_back("% change");
  }
  if (percents) header.push_back("Mean % change");
  rows.push_back(header);

  std::vector<std::string> base{"baseline"};
  for (GenderClass g : kAllGenders) {
    base.push_back(value_cell(report.baseline.by_gender.at(g).mean_ogb));
    if (percents) base.push_back("-");
  }
  if (percents) base.push_back("-");
  rows.push_back(base);

  for (const auto& m : report.methods) {
    std::vector<std::string> row{m.name};
    for (GenderClass g : kAllGenders) {
      row.push_back(value_cell(m.summary.by_gender.at(g).mean_ogb));
      row.push_back(percent_cell(m.percent_change_by_gender.at(g)));
    }
    row.push_back(percent_cell(m.mean_percent_change));
    rows.push_back(row);
  }

  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << row[c];
      for (std::size_t pad = row[c].size(); pad < widths[c]; ++pad) out << ' ';
    }
    out << '\n';
  }
  return out.str();
}

std::string render_delimited(const BiasReport& report) {
  std::ostringstream out;
  out << "method\tgender\tmean_ogb\tcount\tpercent_change\tmean_percent_change\n";
  const auto emit = [&](const std::string& name, const GroupSummary& s,
                        const MethodRow* row) {
    for (GenderClass g : kAllGenders) {
      out << name << '\t' << lexicon::to_string(g) << '\t'
          << value_cell(s.by_gender.at(g).mean_ogb) << '\t'
          << s.by_gender.at(g).count << '\t';
      if (row) {
        out << percent_cell(row->percent_change_by_gender.at(g)) << '\t'
            << percent_cell(row->mean_percent_change);
      } else {
        out << "-\t-";
      }
      out << '\n';
    }
  };
  emit("baseline", report.baseline, nullptr);
  for (const auto& m : report.methods) emit(m.name, m.summary, &m);
  return out.str();
}

json summary_to_json(const GroupSummary& s) {
  json out;
  out["model_id"] = s.model_id;
  out["corpus_id"] = s.corpus_id;
  for (GenderClass g : kAllGenders) {
    out["groups"][lexicon::to_string(g)] = {
        {"mean_ogb", numfmt::round_significant(s.by_gender.at(g).mean_ogb,
                                               kValueDigits)},
        {"count", s.by_gender.at(g).count}};
  }
  return out;
}

std::string render_structured(const BiasReport& report) {
  json doc;
  doc["baseline"] = summary_to_json(report.baseline);
  doc["methods"] = json::array();
  for (const auto& m : report.methods) {
    json entry;
    entry["name"] = m.name;
    entry["summary"] = summary_to_json(m.summary);
    for (GenderClass g : kAllGenders) {
      entry["percent_change"][lexicon::to_string(g)] = numfmt::round_decimals(
          m.percent_change_by_gender.at(g), kPercentDecimals);
    }
    entry["mean_percent_change"] =
        numfmt::round_decimals(m.mean_percent_change, kPercentDecimals);
    doc["methods"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

}  // namespace

std::string render_report(const BiasReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::TableText: return render_table(report);
    case ReportFormat::Delimited: return render_delimited(report);
    case ReportFormat::Structured: return render_structured(report);
  }
  raise(ErrorKind::UsageError, "unknown report format");
}

}  // namespace ogb::metrics
