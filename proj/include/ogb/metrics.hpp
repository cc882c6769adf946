#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ogb/lexicon.hpp"
#include "ogb/scorer.hpp"

namespace ogb::metrics {

struct GroupStats {
  double mean_ogb = 0.0;
  std::size_t count = 0;
};

struct GroupSummary {
  std::map<lexicon::GenderClass, GroupStats> by_gender;
  std::string model_id;
  std::string corpus_id;
};

// Instance-weighted per-gender arithmetic means. Requires every gender
// class to be present (MissingGenderClass otherwise), non-empty input.
GroupSummary group_means(const std::vector<scorer::ScoredInstance>& scored,
                         const std::string& model_id = "",
                         const std::string& corpus_id = "");
GroupSummary group_means(const std::vector<scorer::ScoredRecord>& records,
                         const std::string& corpus_id = "");

// (|baseline| - |debiased|) / |baseline| * 100. Throws ZeroBaseline.
double percent_change(double baseline_value, double debiased_value);

// Arithmetic mean; throws EmptyInput.
double mean_percent_change(const std::vector<double>& values);

struct MethodRow {
  std::string name;
  GroupSummary summary;
  std::map<lexicon::GenderClass, double> percent_change_by_gender;
  double mean_percent_change = 0.0;
};

struct BiasReport {
  GroupSummary baseline;
  std::vector<MethodRow> methods;
};

// Computes per-gender percent changes and their mean for each method.
BiasReport make_report(
    GroupSummary baseline,
    const std::vector<std::pair<std::string, GroupSummary>>& methods);

enum class ReportFormat { TableText, Delimited, Structured };

// Deterministic text. Values rounded half-even to 4 significant digits,
// percents to 2 decimals; all formats carry the same rounded numbers.
std::string render_report(const BiasReport& report, ReportFormat format);

}  // namespace ogb::metrics
