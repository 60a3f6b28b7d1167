#include "cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cli/svg.hpp"
#include "lesioneval/error.hpp"
#include "lesioneval/format.hpp"
#include "lesioneval/intensity.hpp"
#include "lesioneval/nifti.hpp"
#include "lesioneval/parallel.hpp"
#include "lesioneval/phantom.hpp"
#include "lesioneval/serialize.hpp"
#include "lesioneval/stats.hpp"

namespace lesioneval::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError(fmt::format("{}: cannot create output directory: {}", dir.string(), ec.message()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("{}: cannot open for writing", path.string()));
  out << text;
  if (!out) throw InputError(fmt::format("{}: write failed", path.string()));
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

void require_manifest(const EvalConfig& c) {
  if (c.manifest.empty()) throw InputError("config: field 'manifest' is required");
}

std::vector<VolumePair> load_manifest_cohort(const fs::path& manifest, unsigned threads) {
  return load_cohort(read_manifest(manifest), threads);
}

struct ResolvedThreshold {
  double value = 0.5;
  std::string source = "default";
  std::optional<ThresholdSelection> selection;
};

// Explicit threshold first, then selection on the reserved split, else 0.5.
ResolvedThreshold resolve_threshold(const EvalConfig& c) {
  ResolvedThreshold r;
  if (c.threshold) {
    r.value = *c.threshold;
    r.source = "config";
  } else if (!c.threshold_manifest.empty()) {
    const auto split = load_manifest_cohort(c.threshold_manifest, c.detection.threads);
    r.selection = select_threshold(split, c.thresholds, c.detection);
    r.value = r.selection->threshold;
    r.source = "selected";
  }
  return r;
}

json threshold_json(const ResolvedThreshold& t) {
  json j{{"value", t.value}, {"source", t.source}};
  if (t.selection) j["selection"] = *t.selection;
  return j;
}

json summary_json(const std::string& metric, const std::vector<double>& values) {
  if (values.empty()) {
    return json{{"metric", metric}, {"median", nullptr}, {"q25", nullptr}, {"q75", nullptr}, {"n", 0},
                {"cell", "n/a"}};
  }
  return aggregate(metric, values);
}

std::string summary_line(const std::string& metric, const std::vector<double>& values) {
  if (values.empty()) return fmt::format("{:<11}  n/a  (n=0)\n", metric);
  const auto f = aggregate(metric, values);
  return fmt::format("{:<11}  {}  (n={})\n", metric, format_summary_cell(f), f.n);
}

struct StratumResult {
  std::vector<DetectionMetrics> detection;             // one per patient
  std::vector<std::vector<SegmentationMetrics>> lesions;  // per patient, acceptance order
};

json pooled_json(const PooledDetection& p) {
  json j{{"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn}, {"patients", p.patients}, {"fppi", p.fppi}, {"f2", p.f2}};
  j["sensitivity"] = p.sensitivity ? json(*p.sensitivity) : json(nullptr);
  return j;
}

// Dice and NSD are summarised per patient (mean over its detected lesions);
// detection metrics are per patient already.
struct StratumSummary {
  json j;
  std::string text;
};

StratumSummary summarise(const std::string& name, double min_ml, const StratumResult& r) {
  std::vector<double> sens, fppi, f2, dice_v, nsd_v;
  for (std::size_t i = 0; i < r.detection.size(); ++i) {
    const auto& d = r.detection[i];
    if (d.sensitivity) sens.push_back(*d.sensitivity);
    fppi.push_back(d.fppi);
    f2.push_back(d.f2);
    const auto& les = r.lesions[i];
    if (!les.empty()) {
      double sd = 0.0, sn = 0.0;
      for (const auto& l : les) {
        sd += l.dice;
        sn += l.nsd;
      }
      dice_v.push_back(sd / static_cast<double>(les.size()));
      nsd_v.push_back(sn / static_cast<double>(les.size()));
    }
  }
  const std::vector<std::pair<std::string, const std::vector<double>*>> metrics = {
      {"sensitivity", &sens}, {"fppi", &fppi}, {"f2", &f2}, {"dice", &dice_v}, {"nsd", &nsd_v}};

  StratumSummary s;
  json rows = json::array();
  s.text = name == "all" ? "All lesions\n" : fmt::format("Lesions > {} ml\n", format_number(min_ml));
  for (const auto& [metric, values] : metrics) {
    rows.push_back(summary_json(metric, *values));
    s.text += "  " + summary_line(metric, *values);
  }
  s.j = json{{"stratum", name}, {"min_ml", min_ml}, {"metrics", rows}, {"pooled", pooled_json(pool_detection(r.detection))}};
  return s;
}

std::string flatten_lesions(const std::vector<std::vector<SegmentationMetrics>>& per_patient) {
  std::vector<SegmentationMetrics> all;
  for (const auto& v : per_patient) all.insert(all.end(), v.begin(), v.end());
  return segmentation_csv(all);
}

// Number of ground-truth lesions above `min_ml` across the cohort.
std::int64_t count_gt_lesions(std::span<const VolumePair> pairs, double min_ml, const DetectionConfig& config) {
  std::vector<std::int64_t> counts(pairs.size(), 0);
  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    const auto gt = prepare_ground_truth(pairs[i].ground_truth, config);
    counts[i] = static_cast<std::int64_t>(filter_by_volume(gt.lesions, min_ml).size());
  });
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

}  // namespace

void cmd_eval(const EvalConfig& c) {
  require_manifest(c);
  const auto cohort = load_manifest_cohort(c.manifest, c.detection.threads);
  const auto threshold = resolve_threshold(c);

  const double strata_ml[2] = {0.0, c.large_lesion_ml};
  StratumResult strata[2];
  for (auto& s : strata) {
    s.detection.resize(cohort.size());
    s.lesions.resize(cohort.size());
  }
  parallel_for(cohort.size(), c.detection.threads, [&](std::size_t i) {
    const auto lesions = extract_patient_lesions(cohort[i], threshold.value, c.detection);
    for (int k = 0; k < 2; ++k) {
      const auto match = match_stratum(lesions, strata_ml[k], c.detection);
      strata[k].detection[i] = detection_metrics(match);
      const auto masks = detected_pairs_masks(match, lesions.pred_labels, lesions.gt_labels, MaskExtent::cropped);
      strata[k].lesions[i] = segmentation_metrics(masks, c.nsd_tolerance, cohort[i].patient_id);
    }
  });

  ensure_dir(c.output);
  write_text(c.output / "patients.csv", detection_csv(strata[0].detection));
  write_text(c.output / "lesions.csv", flatten_lesions(strata[0].lesions));
  write_text(c.output / "patients_large.csv", detection_csv(strata[1].detection));
  write_text(c.output / "lesions_large.csv", flatten_lesions(strata[1].lesions));

  const auto all = summarise("all", 0.0, strata[0]);
  const auto large = summarise("large", c.large_lesion_ml, strata[1]);
  json summary{{"threshold", threshold_json(threshold)},
               {"patients", cohort.size()},
               {"summary_over", "patients"},
               {"strata", json::array({all.j, large.j})}};
  write_json(c.output / "summary.json", summary);

  std::vector<FoldSummary> csv_rows;
  for (const auto* s : {&all, &large}) {
    for (const auto& m : s->j.at("metrics")) {
      if (m.at("n").get<std::size_t>() == 0) continue;
      FoldSummary f;
      f.metric = s->j.at("stratum").get<std::string>() + "." + m.at("metric").get<std::string>();
      f.median = m.at("median").get<double>();
      f.q25 = m.at("q25").get<double>();
      f.q75 = m.at("q75").get<double>();
      f.n = m.at("n").get<std::size_t>();
      csv_rows.push_back(f);
    }
  }
  write_text(c.output / "summary.csv", summary_csv(csv_rows));
  write_text(c.output / "summary.txt",
             fmt::format("Threshold {} ({})\n\n{}\n{}", format_number(threshold.value), threshold.source, all.text,
                         large.text));
}

void cmd_froc(const EvalConfig& c) {
  require_manifest(c);
  const auto cohort = load_manifest_cohort(c.manifest, c.detection.threads);
  const auto all = froc(cohort, c.thresholds, c.fppi_limit, std::nullopt, c.detection, c.froc_pooling);

  std::optional<FrocCurve> large;
  if (count_gt_lesions(cohort, c.large_lesion_ml, c.detection) > 0) {
    large = froc(cohort, c.thresholds, c.fppi_limit_large, c.large_lesion_ml, c.detection, c.froc_pooling);
  }

  ensure_dir(c.output);
  write_text(c.output / "froc.csv", froc_csv(all));
  FrocCurve empty_large;
  empty_large.fppi_limit = c.fppi_limit_large;
  write_text(c.output / "froc_large.csv", froc_csv(large.value_or(empty_large)));
  json j{{"all", all},
         {"large", large ? json(*large) : json(nullptr)},
         {"large_lesion_ml", c.large_lesion_ml},
         {"sensitivity", c.froc_pooling == SensitivityPooling::pooled ? "pooled" : "per-patient-mean"},
         {"patients", cohort.size()}};
  write_json(c.output / "froc.json", j);
  write_text(c.output / "froc.svg", froc_svg(all, large.value_or(empty_large), c.large_lesion_ml));
}

void cmd_threshold(const EvalConfig& c) {
  const fs::path split = c.threshold_manifest.empty() ? c.manifest : c.threshold_manifest;
  if (split.empty()) throw InputError("config: field 'threshold_manifest' or 'manifest' is required");
  const auto cohort = load_manifest_cohort(split, c.detection.threads);
  const auto sel = select_threshold(cohort, c.thresholds, c.detection);
  ensure_dir(c.output);
  json j = sel;
  j["split"] = split.generic_string();
  j["patients"] = cohort.size();
  write_json(c.output / "threshold.json", j);
}

void cmd_volume_curve(const EvalConfig& c) {
  require_manifest(c);
  const auto cohort = load_manifest_cohort(c.manifest, c.detection.threads);
  const auto threshold = resolve_threshold(c);
  const auto strata = volume_stratified(cohort, threshold.value, c.volume_grid, c.detection);
  ensure_dir(c.output);
  write_text(c.output / "volume_curve.csv", volume_strata_csv(strata));
  write_text(c.output / "volume_curve.svg", volume_curve_svg(strata));
}

// ---------------------------------------------------------------- stats

namespace {

struct Table {
  fs::path source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open", path.string()));
  Table t;
  t.source = path;
  std::string line;
  if (!std::getline(in, line)) throw InputError(fmt::format("{}: empty file", path.string()));
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) {
      throw InputError(fmt::format("{}: line {}: expected {} cells, found {}", path.string(), lineno,
                                   t.header.size(), cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::optional<double> parse_cell(const Table& t, std::size_t row, std::size_t col) {
  const auto& cell = t.rows[row][col];
  if (cell.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw InputError(fmt::format("{}: row {}: column '{}': not a number: '{}'", t.source.string(), row + 1,
                                 t.header[col], cell));
  }
}

struct MethodData {
  std::string name;
  std::map<std::string, std::map<std::string, double>> patient;  // metric -> patient_id -> value
  std::map<std::string, std::vector<double>> lesion;             // metric -> values in file order
  bool has_patients = false;
  bool has_lesions = false;
};

const std::vector<std::string> kPatientMetrics = {"sensitivity", "fppi", "f2"};
const std::vector<std::string> kLesionMetrics = {"dice", "nsd"};

void absorb(MethodData& m, const Table& t) {
  const auto pid = t.column("patient_id");
  if (!pid) throw InputError(fmt::format("{}: missing column 'patient_id'", t.source.string()));
  if (t.column("dice")) {
    m.has_lesions = true;
    for (const auto& metric : kLesionMetrics) {
      const auto col = t.column(metric);
      if (!col) throw InputError(fmt::format("{}: missing column '{}'", t.source.string(), metric));
      auto& out = m.lesion[metric];
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (auto v = parse_cell(t, r, *col)) out.push_back(*v);
      }
    }
  } else if (t.column("f2")) {
    m.has_patients = true;
    for (const auto& metric : kPatientMetrics) {
      const auto col = t.column(metric);
      if (!col) throw InputError(fmt::format("{}: missing column '{}'", t.source.string(), metric));
      auto& out = m.patient[metric];
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (auto v = parse_cell(t, r, *col)) {
          if (!out.emplace(t.rows[r][*pid], *v).second) {
            throw InputError(fmt::format("{}: duplicate patient_id '{}'", t.source.string(), t.rows[r][*pid]));
          }
        }
      }
    }
  } else {
    throw InputError(fmt::format("{}: neither a patient table (f2 column) nor a lesion table (dice column)",
                                 t.source.string()));
  }
}

MethodData load_method(const std::string& name, const fs::path& path) {
  MethodData m;
  m.name = name;
  if (fs::is_directory(path)) {
    const auto patients = path / "patients.csv";
    const auto lesions = path / "lesions.csv";
    if (!fs::exists(patients) && !fs::exists(lesions)) {
      throw InputError(fmt::format("{}: no patients.csv or lesions.csv for method '{}'", path.string(), name));
    }
    if (fs::exists(patients)) absorb(m, read_table(patients));
    if (fs::exists(lesions)) absorb(m, read_table(lesions));
  } else {
    if (!fs::exists(path)) throw InputError(fmt::format("{}: file not found (method '{}')", path.string(), name));
    absorb(m, read_table(path));
  }
  return m;
}

struct Comparison {
  std::string method_a, method_b, metric, level;
  StatTestResult result;
  std::string note;
};

struct Normality {
  std::string method, metric;
  std::optional<StatTestResult> result;
  std::string note;
};

Normality normality(const std::string& method, const std::string& metric, const std::vector<double>& v) {
  Normality n{method, metric, std::nullopt, {}};
  if (v.size() < 3) {
    n.note = "fewer than 3 values";
  } else if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
    n.note = "constant values";
  } else if (v.size() > 5000) {
    n.note = "more than 5000 values";
  } else {
    n.result = shapiro_wilk(v);
  }
  return n;
}

json comparison_json(const Comparison& c) {
  json j = c.result;
  j["method_a"] = c.method_a;
  j["method_b"] = c.method_b;
  j["metric"] = c.metric;
  j["level"] = c.level;
  j["stars"] = std::string(significance_stars(c.result.p_adjusted));
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

}  // namespace

void cmd_stats(const StatsOptions& o) {
  if (o.methods.size() < 2) throw InputError("stats: at least two --method NAME=PATH entries are required");
  std::vector<MethodData> methods;
  for (const auto& [name, path] : o.methods) {
    for (const auto& m : methods) {
      if (m.name == name) throw InputError(fmt::format("stats: duplicate method name '{}'", name));
    }
    methods.push_back(load_method(name, path));
  }

  std::vector<Normality> screens;
  for (const auto& m : methods) {
    for (const auto& metric : kPatientMetrics) {
      if (!m.has_patients) continue;
      std::vector<double> v;
      for (const auto& [pid, x] : m.patient.at(metric)) v.push_back(x);
      screens.push_back(normality(m.name, metric, v));
    }
    for (const auto& metric : kLesionMetrics) {
      if (!m.has_lesions) continue;
      screens.push_back(normality(m.name, metric, m.lesion.at(metric)));
    }
  }

  std::vector<Comparison> comps;
  json skipped = json::array();
  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      const auto& ma = methods[a];
      const auto& mb = methods[b];
      if (ma.has_patients && mb.has_patients) {
        for (const auto& metric : kPatientMetrics) {
          std::vector<double> diffs;
          const auto& xa = ma.patient.at(metric);
          const auto& xb = mb.patient.at(metric);
          for (const auto& [pid, x] : xa) {
            if (const auto it = xb.find(pid); it != xb.end()) diffs.push_back(x - it->second);
          }
          Comparison c{ma.name, mb.name, metric, "patient", {}, {}};
          if (diffs.empty()) {
            skipped.push_back({{"method_a", ma.name}, {"method_b", mb.name}, {"metric", metric},
                               {"reason", "no patients with values in both methods"}});
            continue;
          }
          if (std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; })) {
            c.result.test_name = "wilcoxon_signed_rank";
            c.result.statistic = 0.0;
            c.result.p_value = 1.0;
            c.result.n1 = 0;
            c.result.method = PValueMethod::exact;
            c.note = "all paired differences are zero";
          } else {
            c.result = wilcoxon_signed_rank(diffs);
          }
          comps.push_back(std::move(c));
        }
      }
      if (ma.has_lesions && mb.has_lesions) {
        for (const auto& metric : kLesionMetrics) {
          const auto& xa = ma.lesion.at(metric);
          const auto& xb = mb.lesion.at(metric);
          if (xa.empty() || xb.empty()) {
            skipped.push_back({{"method_a", ma.name}, {"method_b", mb.name}, {"metric", metric},
                               {"reason", "a method has no detected lesions"}});
            continue;
          }
          comps.push_back({ma.name, mb.name, metric, "lesion", mann_whitney_u(xa, xb), {}});
        }
      }
    }
  }

  const std::size_t m = o.bonferroni_m.value_or(std::max<std::size_t>(comps.size(), 1));
  if (m < comps.size()) {
    throw InputError(fmt::format("stats: bonferroni m = {} is smaller than the {} comparisons", m, comps.size()));
  }
  std::vector<StatTestResult> results;
  for (const auto& c : comps) results.push_back(c.result);
  apply_bonferroni(results, m);
  for (std::size_t i = 0; i < comps.size(); ++i) comps[i].result = results[i];

  json norm = json::array();
  for (const auto& s : screens) {
    json j = s.result ? json(*s.result) : json{{"test", "shapiro_wilk"}};
    j["method_name"] = s.method;
    j["metric"] = s.metric;
    if (s.result) j["normal"] = s.result->p_value >= o.alpha;
    if (!s.note.empty()) j["note"] = s.note;
    norm.push_back(j);
  }
  json rows = json::array();
  std::string csv = "method_a,method_b,metric,level,test,statistic,p,p_adj,n1,n2,method,stars\n";
  std::string stars;
  for (const auto& c : comps) {
    rows.push_back(comparison_json(c));
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", c.method_a, c.method_b, c.metric, c.level,
                       c.result.test_name, format_number(c.result.statistic), format_number(c.result.p_value),
                       format_number(c.result.p_adjusted), c.result.n1, c.result.n2, to_string(c.result.method),
                       significance_stars(c.result.p_adjusted));
    stars += fmt::format("{} vs {} {}: {}\n", c.method_a, c.method_b, c.metric,
                         significance_stars(c.result.p_adjusted));
  }

  ensure_dir(o.output);
  write_json(o.output / "stats.json",
             json{{"bonferroni_m", m}, {"alpha", o.alpha}, {"normality", norm}, {"comparisons", rows},
                  {"skipped", skipped}});
  write_text(o.output / "stats.csv", csv);
  write_text(o.output / "stars.txt", stars);
}

// -------------------------------------------------------------- phantom

std::uint64_t cohort_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser of seed + index, so neighbouring seeds decorrelate.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void cmd_phantom(const PhantomOptions& o) {
  if (o.spec.has_value() == o.random_count.has_value()) {
    throw InputError("phantom: give exactly one of --spec or --random");
  }
  std::vector<std::pair<std::string, PhantomSpec>> specs;
  if (o.spec) {
    PhantomSpec s;
    try {
      s = read_json(*o.spec).get<PhantomSpec>();
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", o.spec->string(), e.what()));
    }
    specs.emplace_back(o.spec->stem().string(), std::move(s));
  } else {
    if (*o.random_count < 1) throw InputError("phantom: --random must be >= 1");
    RandomPhantomOptions ro;
    ro.noise_level = o.noise_level;
    ro.boundary_jitter_voxels = o.boundary_jitter_voxels;
    for (int i = 0; i < *o.random_count; ++i) {
      specs.emplace_back(fmt::format("phantom-{:03d}", i),
                         random_phantom_spec(cohort_seed(o.seed, static_cast<std::uint64_t>(i)), ro));
    }
  }

  ensure_dir(o.output);
  const std::string ext = o.compress ? ".nii.gz" : ".nii";
  std::vector<ManifestRow> rows(specs.size());
  parallel_for(specs.size(), o.threads, [&](std::size_t i) {
    const auto& [id, spec] = specs[i];
    VolumePair pair;
    try {
      pair = generate(spec, id);
    } catch (const InputError& e) {
      throw InputError(fmt::format("phantom {}: {}", id, e.what()));
    }
    const fs::path dir = o.output / id;
    ensure_dir(dir);
    rows[i] = {id, dir / ("prediction" + ext), dir / ("ground_truth" + ext)};
    write_volume(pair.prediction, rows[i].prediction_path);
    write_volume(pair.ground_truth, rows[i].ground_truth_path);
    write_json(dir / "spec.json", json(spec));
    write_json(dir / "expected.json", expected_counts_json(spec, pair));
  });
  write_manifest(rows, o.output / "manifest.json");
}

// ---------------------------------------------------------- standardize

void cmd_standardize(const StandardizeCommand& o) {
  const Volume input = read_volume(o.input);
  LandmarkProfile reference;
  const bool profile_file =
      o.reference.extension() == ".json" && !fs::exists(fs::path(o.reference).replace_extension(".raw"));
  if (profile_file) {
    try {
      reference = read_json(o.reference).get<LandmarkProfile>();
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", o.reference.string(), e.what()));
    }
    if (!o.percentiles.empty() && o.percentiles != reference.percentiles) {
      throw InputError(fmt::format("{}: profile percentiles differ from --percentiles", o.reference.string()));
    }
  } else {
    const auto percentiles = o.percentiles.empty() ? default_landmark_percentiles() : o.percentiles;
    try {
      reference = extract_landmarks(read_volume(o.reference), percentiles);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", o.reference.string(), e.what()));
    }
  }
  LandmarkProfile source;
  try {
    source = extract_landmarks(input, reference.percentiles);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", o.input.string(), e.what()));
  }
  lesioneval::StandardizeOptions opts;
  opts.preserve_background = o.preserve_background;
  Volume out;
  try {
    out = standardize(input, source, reference, opts);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", o.input.string(), e.what()));
  }
  if (!o.output.parent_path().empty()) ensure_dir(o.output.parent_path());
  write_volume(out, o.output);
  if (o.landmarks_out) {
    write_json(*o.landmarks_out, json{{"source", source}, {"reference", reference}});
  }
}

}  // namespace lesioneval::cli
