#include "vmstool/commands.hpp"

#include <csignal>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vms/augment.hpp"
#include "vms/errors.hpp"
#include "vms/featpool.hpp"
#include "vms/image.hpp"
#include "vms/manifest.hpp"
#include "vms/memstats.hpp"
#include "vms/mempredict.hpp"
#include "vms/recon.hpp"
#include "vms/schedule.hpp"
#include "vms/tensor_io.hpp"
#include "vms/vms_builder.hpp"
#include "vmstool/common.hpp"
#include "vmstool/service.hpp"
#include "vmstool/svg.hpp"

namespace vmstool {
namespace {

using nlohmann::json;

std::string opt_rate(const std::optional<double>& v) { return v ? fixed(*v, 6) : ""; }

vms::DatasetManifest load_manifest_checked(const fs::path& path) {
  if (path.empty()) throw vms::ValidationError("--manifest is required");
  return vms::load_manifest(path);
}

struct MapsArgs {
  fs::path logs;
  fs::path manifest;
  std::string kind = "true";
  int threshold = vms::kDefaultAnalysisThreshold;
  std::string grid = "100x100";
  std::string overlap = "union";
  bool exclusive = false;
  bool include_incomplete = false;
};

void add_map_options(CLI::App* cmd, MapsArgs& a, bool need_manifest) {
  cmd->add_option("--logs", a.logs, "Directory of session logs (*.jsonl)")->required();
  auto* m = cmd->add_option("--manifest", a.manifest, "Dataset manifest");
  if (need_manifest) m->required();
  cmd->add_option("--kind", a.kind, "VMS kind: true|false|combined");
  cmd->add_option("--threshold", a.threshold, "Analysis threshold in [30, 100]");
  cmd->add_option("--grid", a.grid, "Analysis grid WIDTHxHEIGHT");
  cmd->add_option("--overlap", a.overlap, "Overlap of one participant's rectangles: union|sum");
  cmd->add_flag("--exclusive", a.exclusive, "Require ratings strictly above the threshold");
  cmd->add_flag("--include-incomplete", a.include_incomplete, "Keep sessions flagged incomplete");
}

vms::VmsOptions vms_options(const MapsArgs& a) {
  vms::VmsOptions o;
  o.threshold = a.threshold;
  o.grid = parse_grid(a.grid);
  if (a.overlap == "union") {
    o.overlap = vms::OverlapPolicy::Union;
  } else if (a.overlap == "sum") {
    o.overlap = vms::OverlapPolicy::Sum;
  } else {
    throw vms::ValidationError("--overlap must be union or sum");
  }
  o.inclusive = !a.exclusive;
  return o;
}

json maps_config(const MapsArgs& a) {
  return {{"logs", a.logs.string()},           {"manifest", a.manifest.string()}, {"kind", a.kind},
          {"threshold", a.threshold},          {"grid", a.grid},                  {"overlap", a.overlap},
          {"exclusive", a.exclusive},          {"include_incomplete", a.include_incomplete}};
}

void report_warnings(const LoadedLogs& logs) {
  for (const auto& w : logs.warnings) std::cerr << "warning: " << w << '\n';
  if (logs.excluded_incomplete) {
    std::cerr << "note: excluded " << logs.excluded_incomplete << " incomplete session(s)\n";
  }
}

std::vector<std::string> manifest_ids(const vms::DatasetManifest& m) {
  std::vector<std::string> ids;
  for (const auto& img : m.images) ids.push_back(img.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Maps for every id, built from `index`; ids without contributors go to `skipped`.
std::map<std::string, vms::MapGrid> build_all(const vms::VmsIndex& index, const std::vector<std::string>& ids,
                                             vms::VmsKind kind, std::vector<std::string>* skipped) {
  std::map<std::string, vms::MapGrid> maps;
  for (const auto& id : ids) {
    if (auto m = index.build(id, kind)) {
      maps.emplace(id, std::move(*m));
    } else if (skipped) {
      skipped->push_back(id);
    }
  }
  return maps;
}

// ---------------------------------------------------------------------------

struct ScheduleArgs {
  fs::path manifest;
  fs::path out;
  std::uint64_t seed = 0;
};

int cmd_schedule(const ScheduleArgs& a) {
  vms::ManifestOptions mo;
  mo.check_files = false;
  const auto manifest = vms::load_manifest(a.manifest, mo);
  const auto sched = vms::generate_schedule(manifest, a.seed);
  fs::create_directories(a.out);
  write_text(a.out / "schedule.json", vms::serialize_schedule(sched));
  write_stamp(a.out, "schedule", json{{"manifest", a.manifest.string()}}.dump(), a.seed);
  std::cout << "schedule: " << sched.study.size() << " study, " << sched.test.size() << " test trials\n";
  return kExitOk;
}

struct BuildArgs {
  MapsArgs maps;
  fs::path out;
  std::uint64_t seed = 0;
  bool pgm = false;
};

std::string encode_pgm16(const vms::MapGrid& m) {
  std::string s = "P5\n" + std::to_string(m.width()) + " " + std::to_string(m.height()) + "\n65535\n";
  for (double v : m.values()) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    s.push_back(static_cast<char>(q >> 8));
    s.push_back(static_cast<char>(q & 0xff));
  }
  return s;
}

int cmd_build_maps(const BuildArgs& a) {
  const auto logs = load_logs(a.maps.logs, a.maps.include_incomplete);
  report_warnings(logs);
  const auto kind = vms::parse_vms_kind(a.maps.kind);
  const vms::VmsIndex index(logs.logs, vms_options(a.maps));
  std::vector<std::string> ids;
  if (!a.maps.manifest.empty()) {
    ids = manifest_ids(load_manifest_checked(a.maps.manifest));
  } else {
    ids = vms::RatingIndex(logs.logs).image_ids();
  }
  std::vector<std::string> skipped;
  const auto maps = build_all(index, ids, kind, &skipped);
  const fs::path dir = a.out / "vms" / std::string(vms::to_string(kind));
  fs::create_directories(dir);
  std::ostringstream listing;
  listing << "image_id,path\n";
  for (const auto& [id, m] : maps) {
    const auto rel = fs::path("vms") / std::string(vms::to_string(kind)) / (id + ".vtns");
    vms::write_tensor(a.out / rel, m.to_tensor());
    if (a.pgm) write_text(a.out / "vms" / std::string(vms::to_string(kind)) / (id + ".pgm"), encode_pgm16(m));
    listing << id << ',' << rel.generic_string() << '\n';
  }
  std::ostringstream skip;
  skip << "image_id,reason\n";
  for (const auto& id : skipped) skip << id << ",empty VMS\n";
  write_text(a.out / "maps.csv", listing.str());
  write_text(a.out / "build_maps_skipped.csv", skip.str());
  auto cfg = maps_config(a.maps);
  cfg["pgm"] = a.pgm;
  write_stamp(a.out, "build-maps", cfg.dump(), a.seed);
  std::cout << "built " << maps.size() << " " << vms::to_string(kind) << " VMS map(s); skipped " << skipped.size()
            << " empty\n";
  return kExitOk;
}

struct StatsArgs {
  fs::path logs;
  fs::path manifest;
  fs::path out;
  int threshold = vms::kDefaultAnalysisThreshold;
  int floor = vms::kSelectionGate;
  double cutoff = 0.01;
  bool exclusive = false;
  bool include_incomplete = false;
  std::uint64_t seed = 0;
};

int cmd_stats(const StatsArgs& a) {
  if (a.threshold < vms::kSelectionGate || a.threshold > 100) {
    throw vms::ValidationError("--threshold must lie in [30, 100]");
  }
  const auto logs = load_logs(a.logs, a.include_incomplete);
  report_warnings(logs);
  const vms::RateOptions ro{a.threshold, !a.exclusive};
  const vms::RatingIndex index(logs.logs);
  fs::create_directories(a.out);

  std::ostringstream rates;
  rates << "image_id,n_repeat,hits,hr,n_filler,false_alarms,far\n";
  std::vector<double> hrs, fars;
  for (const auto& id : index.image_ids()) {
    const auto r = index.rates(id, ro);
    rates << id << ',' << r.n_repeat_showings << ',' << r.hits << ',' << opt_rate(r.hr) << ','
          << r.n_filler_showings << ',' << r.false_alarms << ',' << opt_rate(r.far) << '\n';
    if (r.hr) hrs.push_back(*r.hr);
    if (r.far) fars.push_back(*r.far);
  }
  write_text(a.out / "rates.csv", rates.str());
  const auto shr = vms::summarize(hrs);
  const auto sfar = vms::summarize(fars);

  json summary = {{"threshold", a.threshold},
                  {"hr", {{"mean", shr.mean}, {"std", shr.stddev}, {"images", shr.n}}},
                  {"far", {{"mean", sfar.mean}, {"std", sfar.stddev}, {"images", sfar.n}}},
                  {"sessions", logs.logs.size()}};

  std::optional<int> selected;
  try {
    const auto sel = vms::select_threshold(logs.logs, {a.floor, a.cutoff, !a.exclusive});
    selected = sel.threshold;
    std::ostringstream curve;
    curve << "threshold,rho,n_images\n";
    vmstool::Series s{"rho(t)", {}, {}};
    for (const auto& p : sel.curve) {
      curve << p.threshold << ',' << opt_rate(p.rho) << ',' << p.n_images << '\n';
      if (p.rho) {
        s.xs.push_back(p.threshold);
        s.ys.push_back(*p.rho);
      }
    }
    write_text(a.out / "threshold_curve.csv", curve.str());
    write_text(a.out / "threshold_curve.svg",
               svg_line_plot("Spearman rho between per-image HR and FAR", "threshold", "rho", {s}));
    summary["selected_threshold"] = sel.threshold;
  } catch (const vms::DegenerateInputError& e) {
    summary["selected_threshold"] = nullptr;
    summary["threshold_note"] = e.what();
  }

  try {
    const auto det = vms::detection_summary(logs.logs, a.threshold);
    std::ostringstream roc;
    roc << "threshold,far,hr\n";
    vmstool::Series s{"ROC", {}, {}};
    for (const auto& p : det.roc) {
      roc << p.threshold << ',' << fixed(p.far) << ',' << fixed(p.hr) << '\n';
      s.xs.push_back(p.far);
      s.ys.push_back(p.hr);
    }
    write_text(a.out / "roc.csv", roc.str());
    write_text(a.out / "roc.svg", svg_line_plot("ROC (AUC " + fixed(det.auc, 3) + ")", "FAR", "HR", {s}));
    summary["detection"] = {{"auc", det.auc},         {"d_prime", det.d_prime}, {"pooled_hr", det.hr},
                            {"pooled_far", det.far},  {"n_repeat", det.n_repeat}, {"n_filler", det.n_filler},
                            {"warnings", det.warnings}};
  } catch (const vms::ValidationError& e) {
    summary["detection"] = nullptr;
    summary["detection_note"] = e.what();
  }

  if (!a.manifest.empty()) {
    const auto manifest = load_manifest_checked(a.manifest);
    std::ostringstream cats;
    cats << "level,category,n_images,mean_hr,std_hr,mean_far,std_far\n";
    static const char* levels[] = {"supra", "mid", "leaf"};
    for (const auto& c : vms::category_stats(logs.logs, manifest, ro)) {
      cats << levels[static_cast<int>(c.level)] << ',' << c.name << ',' << c.n_images << ',' << fixed(c.mean_hr)
           << ',' << fixed(c.stddev_hr) << ',' << fixed(c.mean_far) << ',' << fixed(c.stddev_far) << '\n';
    }
    write_text(a.out / "categories.csv", cats.str());
  }

  write_text(a.out / "summary.json", summary.dump(2) + "\n");
  write_stamp(a.out, "stats",
              json{{"logs", a.logs.string()},
                   {"manifest", a.manifest.string()},
                   {"threshold", a.threshold},
                   {"floor", a.floor},
                   {"cutoff", a.cutoff},
                   {"exclusive", a.exclusive},
                   {"include_incomplete", a.include_incomplete}}
                  .dump(),
              a.seed);

  std::cout << "threshold " << a.threshold << ": HR " << fixed(shr.mean, 3) << " +/- " << fixed(shr.stddev, 3)
            << ", FAR " << fixed(sfar.mean, 3) << " +/- " << fixed(sfar.stddev, 3) << '\n';
  std::cout << "selected threshold: " << (selected ? std::to_string(*selected) : std::string("none")) << '\n';
  if (summary["detection"].is_object()) {
    std::cout << "AUC " << fixed(summary["detection"]["auc"].get<double>(), 4) << ", d' "
              << fixed(summary["detection"]["d_prime"].get<double>(), 4) << '\n';
  }
  return kExitOk;
}

struct ConsistencyArgs {
  MapsArgs maps;
  fs::path out;
  std::string metric = "pearson2d";
  int splits = 25;
  int bins = vms::kDefaultMiBins;
  std::string versus;
  int n_boot = 10000;
  std::uint64_t seed = 0;
};

int cmd_consistency(const ConsistencyArgs& a) {
  const auto logs = load_logs(a.maps.logs, a.maps.include_incomplete);
  report_warnings(logs);
  const auto kind = vms::parse_vms_kind(a.maps.kind);
  const auto metric = vms::parse_map_metric(a.metric);
  vms::ConsistencyOptions co;
  co.n_splits = a.splits;
  co.seed = a.seed;
  co.vms = vms_options(a.maps);
  co.mi_bins = a.bins;
  std::vector<std::string> ids;
  if (!a.maps.manifest.empty()) ids = manifest_ids(load_manifest_checked(a.maps.manifest));
  const auto rep = vms::split_half_consistency(logs.logs, ids, kind, metric, co);

  fs::create_directories(a.out);
  std::ostringstream csv;
  csv << "image_id," << vms::to_string(metric) << '\n';
  for (const auto& [id, v] : rep.per_image) csv << id << ',' << fixed(v) << '\n';
  write_text(a.out / "consistency.csv", csv.str());
  write_text(a.out / "consistency.svg",
             svg_histogram(std::string(vms::to_string(kind)) + " VMS split-half consistency (mu " +
                               fixed(rep.mean, 3) + ", sigma " + fixed(rep.stddev, 3) + ")",
                           std::string(vms::to_string(metric)), rep.histogram));
  json summary = {{"kind", vms::to_string(kind)}, {"metric", vms::to_string(metric)}, {"mean", rep.mean},
                  {"std", rep.stddev},            {"n_splits", rep.n_splits},          {"images", rep.per_image.size()},
                  {"omitted", rep.omitted},       {"skipped_evaluations", rep.skipped_evaluations},
                  {"histogram", {{"lo", rep.histogram.lo}, {"hi", rep.histogram.hi}, {"counts", rep.histogram.counts}}}};

  if (!a.versus.empty()) {
    const auto other_kind = vms::parse_vms_kind(a.versus);
    const auto other = vms::split_half_consistency(logs.logs, ids, other_kind, metric, co);
    std::vector<double> x, y;
    for (const auto& [id, v] : rep.per_image) {
      auto it = other.per_image.find(id);
      if (it == other.per_image.end()) continue;
      x.push_back(v);
      y.push_back(it->second);
    }
    const auto boot = vms::bootstrap_diff_test(x, y, {a.n_boot, 0.95, a.seed});
    summary["versus"] = {{"kind", vms::to_string(other_kind)},
                         {"mean", other.mean},
                         {"std", other.stddev},
                         {"paired_images", x.size()},
                         {"bootstrap",
                          {{"significant", boot.significant},
                           {"ci_low", boot.ci_low},
                           {"ci_high", boot.ci_high},
                           {"mean_difference", boot.mean_difference},
                           {"opposite_sign_fraction", boot.opposite_sign_fraction}}}};
    std::cout << vms::to_string(kind) << " vs " << vms::to_string(other_kind) << ": difference "
              << fixed(boot.mean_difference, 4) << " CI [" << fixed(boot.ci_low, 4) << ", " << fixed(boot.ci_high, 4)
              << "] " << (boot.significant ? "significant" : "not significant") << '\n';
  }
  write_text(a.out / "summary.json", summary.dump(2) + "\n");
  auto cfg = maps_config(a.maps);
  cfg.update(json{{"metric", a.metric}, {"splits", a.splits}, {"bins", a.bins}, {"versus", a.versus},
                  {"n_boot", a.n_boot}});
  write_stamp(a.out, "consistency", cfg.dump(), a.seed);
  std::cout << vms::to_string(kind) << " VMS " << vms::to_string(metric) << ": mean " << fixed(rep.mean, 4)
            << ", std " << fixed(rep.stddev, 4) << " over " << rep.per_image.size() << " image(s)\n";
  return kExitOk;
}

struct CompareArgs {
  MapsArgs maps;
  fs::path out;
  std::string against = "saliency";
  std::string metric = "pearson2d";
  int bins = vms::kDefaultMiBins;
  std::uint64_t seed = 0;
};

int cmd_compare(const CompareArgs& a) {
  const auto logs = load_logs(a.maps.logs, a.maps.include_incomplete);
  report_warnings(logs);
  const auto manifest = load_manifest_checked(a.maps.manifest);
  const auto kind = vms::parse_vms_kind(a.maps.kind);
  const auto metric = vms::parse_map_metric(a.metric);
  if (a.against != "saliency" && a.against != "fixations") {
    throw vms::ValidationError("--against must be saliency or fixations");
  }
  const vms::VmsIndex index(logs.logs, vms_options(a.maps));
  const auto ids = manifest_ids(manifest);
  const auto vms_maps = build_all(index, ids, kind, nullptr);
  std::map<std::string, vms::MapGrid> other;
  for (const auto& img : manifest.images) {
    const auto& p = a.against == "saliency" ? img.saliency_map : img.fixation_map;
    if (p) other.emplace(img.id, load_map(*p));
  }
  vms::CompareOptions co;
  co.mi_bins = a.bins;
  co.grid = parse_grid(a.maps.grid);
  const auto cmp = vms::compare_map_sets(vms_maps, other, metric, co);

  fs::create_directories(a.out);
  std::ostringstream csv;
  csv << "image_id," << vms::to_string(metric) << '\n';
  for (const auto& [id, v] : cmp.per_image) csv << id << ',' << fixed(v) << '\n';
  write_text(a.out / "compare.csv", csv.str());
  write_text(a.out / "compare.svg",
             svg_histogram(std::string(vms::to_string(kind)) + " VMS vs " + a.against + " (mu " + fixed(cmp.mean, 3) +
                               ", sigma " + fixed(cmp.stddev, 3) + ")",
                           std::string(vms::to_string(metric)), cmp.histogram));
  json summary = {{"kind", vms::to_string(kind)}, {"against", a.against}, {"metric", vms::to_string(metric)},
                  {"mean", cmp.mean},             {"std", cmp.stddev},     {"images", cmp.per_image.size()},
                  {"omitted", cmp.omitted}};
  write_text(a.out / "summary.json", summary.dump(2) + "\n");
  auto cfg = maps_config(a.maps);
  cfg.update(json{{"against", a.against}, {"metric", a.metric}, {"bins", a.bins}});
  write_stamp(a.out, "compare", cfg.dump(), a.seed);
  std::cout << vms::to_string(kind) << " VMS vs " << a.against << ": mean " << fixed(cmp.mean, 4) << ", std "
            << fixed(cmp.stddev, 4) << " over " << cmp.per_image.size() << " image(s); omitted "
            << cmp.omitted.size() << '\n';
  return kExitOk;
}

struct PredictArgs {
  fs::path logs;
  fs::path manifest;
  fs::path out;
  std::string weight = "none";
  std::string features = "pixels";
  std::vector<std::string> kernels;  // name=rbf|hik
  int splits = 25;
  int threshold = vms::kDefaultAnalysisThreshold;
  double C = 1.0;
  double epsilon = 0.1;
  bool grid_search = false;
  bool include_incomplete = false;
  std::uint64_t seed = 0;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

vms::SpatialDescriptor descriptor_for(const vms::ImageRecord& img, const std::string& name,
                                      std::map<std::string, vms::RgbImage>& image_cache) {
  auto it = img.descriptors.find(name);
  if (it != img.descriptors.end()) return vms::load_descriptor(vms::read_tensor(it->second), name);
  if (name != "pixels" && name != "hog") {
    throw vms::ValidationError("image " + img.id + " has no '" + name + "' descriptor in the manifest");
  }
  if (!img.image_file) throw vms::ValidationError("image " + img.id + " has no pixel file for '" + name + "'");
  auto cached = image_cache.find(img.id);
  if (cached == image_cache.end()) cached = image_cache.emplace(img.id, vms::read_image(*img.image_file)).first;
  return name == "pixels" ? vms::pixel_histogram(cached->second) : vms::hog_descriptor(cached->second);
}

int cmd_predict_mem(const PredictArgs& a) {
  const auto logs = load_logs(a.logs, a.include_incomplete);
  report_warnings(logs);
  const auto manifest = load_manifest_checked(a.manifest);
  const auto names = split_list(a.features);
  if (names.empty()) throw vms::ValidationError("--features needs at least one descriptor name");

  std::map<std::string, vms::KernelKind> kinds;
  for (const auto& n : names) kinds[n] = n == "gist" ? vms::KernelKind::Rbf : vms::KernelKind::HistogramIntersection;
  for (const auto& k : a.kernels) {
    const auto eq = k.find('=');
    if (eq == std::string::npos) throw vms::ValidationError("--kernel expects NAME=rbf|hik");
    kinds[k.substr(0, eq)] = vms::parse_kernel_kind(k.substr(eq + 1));
  }

  std::map<std::string, vms::MapGrid> weights;
  const std::map<std::string, vms::MapGrid>* wptr = nullptr;
  if (a.weight == "vms") {
    vms::VmsOptions vo;
    vo.threshold = a.threshold;
    const vms::VmsIndex index(logs.logs, vo);
    weights = build_all(index, manifest_ids(manifest), vms::VmsKind::Combined, nullptr);
    wptr = &weights;
  } else if (a.weight == "saliency" || a.weight == "fixations") {
    for (const auto& img : manifest.images) {
      const auto& p = a.weight == "saliency" ? img.saliency_map : img.fixation_map;
      if (p) weights.emplace(img.id, load_map(*p));
    }
    wptr = &weights;
  } else if (a.weight != "none") {
    throw vms::ValidationError("--weight must be none, vms, saliency or fixations");
  }

  std::map<std::string, std::map<std::string, vms::SpatialDescriptor>> desc;
  std::map<std::string, vms::RgbImage> image_cache;
  for (const auto& img : manifest.images) {
    for (const auto& n : names) desc[img.id].emplace(n, descriptor_for(img, n, image_cache));
    image_cache.erase(img.id);
  }
  const auto data = vms::build_protocol_dataset(desc, wptr);

  vms::ProtocolOptions po;
  po.n_splits = a.splits;
  po.seed = a.seed;
  po.svr.C = a.C;
  po.svr.epsilon = a.epsilon;
  po.grid_search = a.grid_search;
  po.rates.threshold = a.threshold;

  std::vector<std::pair<std::string, vms::KernelSpec>> specs;
  for (const auto& n : names) specs.push_back({n, vms::KernelSpec{{{n, kinds[n], 0.0}}}});
  if (names.size() > 1) {
    vms::KernelSpec combined;
    for (const auto& n : names) combined.terms.push_back({n, kinds[n], 0.0});
    specs.push_back({"combined", combined});
  }
  std::vector<std::pair<std::string, vms::ProtocolReport>> reports;
  std::ostringstream per_split;
  per_split << "column,split,rho,human_rho,n_train,n_test,dropped,C,epsilon\n";
  for (const auto& [label, spec] : specs) {
    auto rep = vms::run_memorability_protocol(logs.logs, data, spec, po);
    for (std::size_t s = 0; s < rep.splits.size(); ++s) {
      const auto& r = rep.splits[s];
      per_split << label << ',' << s << ',' << opt_rate(r.rho) << ',' << opt_rate(r.human_rho) << ',' << r.n_train
                << ',' << r.n_test << ',' << r.dropped << ',' << fixed(r.C, 4) << ',' << fixed(r.epsilon, 4) << '\n';
    }
    for (const auto& w : rep.warnings) std::cerr << "warning: " << label << ": " << w << '\n';
    reports.emplace_back(label, std::move(rep));
  }
  fs::create_directories(a.out);
  write_text(a.out / "predict_mem.csv", vms::protocol_csv(reports));
  write_text(a.out / "predict_mem_splits.csv", per_split.str());
  json summary = {{"weight", a.weight}, {"images", data.image_ids.size()}, {"skipped_images", data.skipped}};
  for (const auto& [label, r] : reports) {
    summary["columns"][label] = {{"rho", r.rho},
                                 {"human_rho", r.human_rho},
                                 {"top_small", r.top_small},
                                 {"top_large", r.top_large},
                                 {"bottom_large", r.bottom_large},
                                 {"bottom_small", r.bottom_small},
                                 {"dropped_total", r.dropped_total}};
  }
  write_text(a.out / "summary.json", summary.dump(2) + "\n");
  write_stamp(a.out, "predict-mem",
              json{{"logs", a.logs.string()},
                   {"manifest", a.manifest.string()},
                   {"weight", a.weight},
                   {"features", a.features},
                   {"kernels", a.kernels},
                   {"splits", a.splits},
                   {"threshold", a.threshold},
                   {"C", a.C},
                   {"epsilon", a.epsilon},
                   {"grid_search", a.grid_search},
                   {"include_incomplete", a.include_incomplete}}
                  .dump(),
              a.seed);
  for (const auto& [label, r] : reports) {
    std::cout << label << ": rho " << fixed(r.rho, 4) << " (humans " << fixed(r.human_rho, 4) << ")\n";
  }
  return kExitOk;
}

struct AugmentArgs {
  MapsArgs maps;
  fs::path out;
  std::uint64_t seed = 0;
};

int cmd_augment(const AugmentArgs& a) {
  const auto logs = load_logs(a.maps.logs, a.maps.include_incomplete);
  report_warnings(logs);
  const auto manifest = load_manifest_checked(a.maps.manifest);
  const auto kind = vms::parse_vms_kind(a.maps.kind);
  const vms::VmsIndex index(logs.logs, vms_options(a.maps));

  std::vector<std::string> sources;
  std::vector<std::string> skipped;
  std::map<std::string, vms::MapGrid> maps;
  for (const auto& id : manifest_ids(manifest)) {
    const auto* img = manifest.find(id);
    auto m = index.build(id, kind);
    if (!m || !img->image_file) {
      skipped.push_back(id);
      continue;
    }
    maps.emplace(id, std::move(*m));
    sources.push_back(id);
  }
  if (sources.empty()) throw vms::ValidationError("augment: no image has both pixels and a VMS");
  const auto plan = vms::augment_plan(sources);
  json variants = json::array();
  fs::create_directories(a.out / "images");
  fs::create_directories(a.out / "targets");
  for (const auto& id : sources) {
    const auto* img = manifest.find(id);
    const auto pixels = vms::read_image(*img->image_file);
    // The VMS is defined on the analysis grid; lift it to pixel resolution
    // so image and target quarters cut at the same place.
    const auto full = vms::resize_map(maps.at(id), {pixels.width, pixels.height});
    for (const auto& e : plan) {
      if (e.source_id != id) continue;
      const auto vid = e.variant_id();
      vms::write_ppm(a.out / "images" / (vid + ".ppm"), vms::apply_transform(pixels, e));
      const auto t = vms::make_target(full, e);
      vms::write_tensor(a.out / "targets" / (vid + ".vtns"), t.map.to_tensor());
      variants.push_back({{"id", vid},
                          {"source", id},
                          {"transform", vms::to_string(e.transform)},
                          {"quadrant", vms::to_string(e.quadrant)},
                          {"category", {img->category.supra, img->category.mid, img->category.leaf}},
                          {"empty", t.empty}});
    }
  }
  json dataset = {{"kind", vms::to_string(kind)}, {"target_grid", {20, 20}}, {"variants", variants},
                  {"skipped", skipped}};
  write_text(a.out / "recon_dataset.json", dataset.dump(2) + "\n");
  write_stamp(a.out, "augment", maps_config(a.maps).dump(), a.seed);
  std::cout << "augment: " << variants.size() << " variant(s) from " << sources.size() << " image(s); skipped "
            << skipped.size() << '\n';
  return kExitOk;
}

struct ReconData {
  vms::ReconDataset data;
  std::vector<std::string> sources;
  std::vector<vms::CategoryPath> leaves;
  std::vector<bool> identity;
};

ReconData load_recon_dataset(const fs::path& dir, const std::string& layer) {
  json j;
  try {
    j = json::parse(vms::read_file(dir / "recon_dataset.json"));
  } catch (const json::exception& e) {
    throw vms::FormatError("recon_dataset.json: " + std::string(e.what()));
  }
  ReconData out;
  int missing = 0;
  std::string first_missing;
  for (const auto& v : j.at("variants")) {
    const auto id = v.at("id").get<std::string>();
    const auto fpath = dir / "features" / layer / (id + ".vtns");
    if (!fs::exists(fpath)) {
      if (missing++ == 0) first_missing = fpath.string();
      continue;
    }
    const auto ft = vms::read_tensor(fpath);
    const auto tt = vms::read_tensor(dir / "targets" / (id + ".vtns"));
    if (out.data.feature_dims.empty()) out.data.feature_dims = ft.dims;
    if (ft.dims != out.data.feature_dims) throw vms::ValidationError("feature dims differ for " + id);
    out.data.ids.push_back(id);
    out.data.inputs.push_back(ft.data);
    out.data.targets.push_back(tt.data);
    out.sources.push_back(v.at("source").get<std::string>());
    const auto c = v.at("category");
    out.leaves.push_back({c.at(0).get<std::string>(), c.at(1).get<std::string>(), c.at(2).get<std::string>()});
    out.identity.push_back(v.at("transform").get<std::string>() == "id");
  }
  if (missing) {
    throw vms::ValidationError(std::to_string(missing) + " variant(s) lack features for layer '" + layer +
                               "' (first: " + first_missing + ")");
  }
  vms::validate_dataset(out.data);
  return out;
}

vms::ReconDataset subset(const vms::ReconDataset& d, const std::vector<std::size_t>& rows) {
  vms::ReconDataset s;
  s.feature_dims = d.feature_dims;
  for (std::size_t r : rows) {
    s.ids.push_back(d.ids[r]);
    s.inputs.push_back(d.inputs[r]);
    s.targets.push_back(d.targets[r]);
  }
  return s;
}

struct TrainArgs {
  fs::path dataset;
  fs::path out;
  std::string layer;
  std::string loss = "l1";
  int epochs = 30;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch = 40;
  int folds = 5;
  int fold = -1;
  std::uint64_t seed = 0;
};

int cmd_train_recon(const TrainArgs& a) {
  const auto rd = load_recon_dataset(a.dataset, a.layer);
  // Folds are assigned over source images so that no variant of a held-out
  // image is trained on.
  std::vector<std::string> src_ids;
  std::vector<vms::CategoryPath> src_leaves;
  std::map<std::string, std::size_t> src_index;
  for (std::size_t i = 0; i < rd.sources.size(); ++i) {
    if (src_index.emplace(rd.sources[i], src_ids.size()).second) {
      src_ids.push_back(rd.sources[i]);
      src_leaves.push_back(rd.leaves[i]);
    }
  }
  const auto fold_of = vms::stratified_folds(src_ids, src_leaves, a.folds, a.seed);

  vms::TrainConfig cfg;
  cfg.loss = vms::parse_loss_kind(a.loss);
  cfg.lr = a.lr;
  cfg.momentum = a.momentum;
  cfg.weight_decay = a.weight_decay;
  cfg.batch = a.batch;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;

  fs::create_directories(a.out);
  json summary = {{"layer", a.layer}, {"loss", a.loss}, {"folds", json::array()}};
  std::vector<double> at_snapshot, at_best;
  for (int f = 0; f < a.folds; ++f) {
    if (a.fold >= 0 && f != a.fold) continue;
    std::vector<std::size_t> train_rows, eval_rows;
    for (std::size_t i = 0; i < rd.sources.size(); ++i) {
      const bool held_out = fold_of[src_index.at(rd.sources[i])] == f;
      if (!held_out) {
        train_rows.push_back(i);
      } else if (rd.identity[i]) {
        eval_rows.push_back(i);
      }
    }
    if (train_rows.empty() || eval_rows.empty()) throw vms::ValidationError("fold " + std::to_string(f) + " is empty");
    const auto train = subset(rd.data, train_rows);
    const auto eval = subset(rd.data, eval_rows);
    const auto res = vms::train_head(train, cfg, &eval);

    const fs::path dir = a.out / ("fold" + std::to_string(f));
    std::ostringstream csv;
    csv << "epoch,train_loss,eval_rho\n";
    for (const auto& e : res.epochs) csv << e.epoch << ',' << fixed(e.train_loss, 8) << ',' << opt_rate(e.eval_rho) << '\n';
    write_text(dir / "epochs.csv", csv.str());
    vms::save_head(res.params, dir / "head_final");
    json fj = {{"fold", f}, {"train", train.size()}, {"eval", eval.size()}};
    if (res.snapshot) {
      vms::save_head(*res.snapshot, dir / ("head_epoch" + std::to_string(cfg.snapshot_epoch)));
      const auto& e = res.epochs[cfg.snapshot_epoch - 1];
      if (e.eval_rho) {
        fj["snapshot_rho"] = *e.eval_rho;
        at_snapshot.push_back(*e.eval_rho);
      }
    }
    if (res.best) {
      vms::save_head(*res.best, dir / "head_best");
      fj["best_epoch"] = res.best_epoch;
      fj["best_rho"] = *res.epochs[res.best_epoch - 1].eval_rho;
      at_best.push_back(*res.epochs[res.best_epoch - 1].eval_rho);
    }
    summary["folds"].push_back(fj);
    vmstool::Series s{"eval rho", {}, {}};
    for (const auto& e : res.epochs) {
      if (e.eval_rho) {
        s.xs.push_back(e.epoch);
        s.ys.push_back(*e.eval_rho);
      }
    }
    write_text(dir / "eval_rho.svg", svg_line_plot("Held-out rho2D per epoch (" + a.layer + ", " + a.loss + ")",
                                                   "epoch", "rho2D", {s}));
    std::cout << "fold " << f << ": final loss " << fixed(res.epochs.back().train_loss, 6);
    if (fj.contains("snapshot_rho")) std::cout << ", epoch-" << cfg.snapshot_epoch << " rho " << fixed(fj["snapshot_rho"].get<double>(), 4);
    if (res.best) std::cout << ", best rho " << fixed(fj["best_rho"].get<double>(), 4) << " @" << res.best_epoch;
    std::cout << '\n';
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? json(nullptr) : json(std::accumulate(v.begin(), v.end(), 0.0) / v.size());
  };
  summary["mean_snapshot_rho"] = mean(at_snapshot);
  summary["mean_best_rho"] = mean(at_best);
  write_text(a.out / "summary.json", summary.dump(2) + "\n");
  write_stamp(a.out, "train-recon",
              json{{"dataset", a.dataset.string()},
                   {"layer", a.layer},
                   {"loss", a.loss},
                   {"epochs", a.epochs},
                   {"lr", a.lr},
                   {"momentum", a.momentum},
                   {"weight_decay", a.weight_decay},
                   {"batch", a.batch},
                   {"folds", a.folds},
                   {"fold", a.fold}}
                  .dump(),
              a.seed);
  return kExitOk;
}

struct EvalArgs {
  fs::path dataset;
  fs::path out;
  fs::path params;
  std::string layer;
  bool all_variants = false;
  std::uint64_t seed = 0;
};

int cmd_eval_recon(const EvalArgs& a) {
  const auto rd = load_recon_dataset(a.dataset, a.layer);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < rd.data.size(); ++i) {
    if (a.all_variants || rd.identity[i]) rows.push_back(i);
  }
  const auto data = subset(rd.data, rows);
  const auto params = vms::load_head(a.params);
  if (params.shape.input != data.input_size()) throw vms::ValidationError("head input size does not match features");
  const auto ev = vms::eval_recon(params, data);
  fs::create_directories(a.out);
  std::ostringstream csv;
  csv << "variant_id,rho2d\n";
  for (std::size_t i = 0; i < data.size(); ++i) csv << data.ids[i] << ',' << opt_rate(ev.per_image[i]) << '\n';
  write_text(a.out / "eval.csv", csv.str());
  write_text(a.out / "summary.json",
             json{{"mean_rho", ev.mean_rho}, {"images", data.size()}, {"degenerate", ev.degenerate}}.dump(2) + "\n");
  write_stamp(a.out, "eval-recon",
              json{{"dataset", a.dataset.string()},
                   {"params", a.params.string()},
                   {"layer", a.layer},
                   {"all_variants", a.all_variants}}
                  .dump(),
              a.seed);
  std::cout << "mean rho2D " << fixed(ev.mean_rho, 4) << " over " << data.size() - ev.degenerate << " image(s); "
            << ev.degenerate << " degenerate\n";
  return kExitOk;
}

struct ServeArgs {
  fs::path sessions_dir = "sessions";
  fs::path manifest;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::size_t max_bytes = 8 * 1024 * 1024;
  std::uint64_t seed = 0;
};

SessionService* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const ServeArgs& a) {
  ServiceConfig cfg;
  cfg.sessions_dir = resolve_sessions_dir(a.sessions_dir);
  cfg.max_body_bytes = a.max_bytes;
  if (!a.token.empty()) cfg.token = a.token;
  if (!a.manifest.empty()) {
    vms::ManifestOptions mo;
    mo.check_files = false;
    const auto m = vms::load_manifest(a.manifest, mo);
    cfg.manifest_json = vms::serialize_manifest(m, m.base_dir);
  }
  SessionService service(cfg);
  const int port = service.bind(a.host, a.port);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << a.host << ':' << port << ", sessions in " << cfg.sessions_dir.string() << std::endl;
  service.listen();
  g_service = nullptr;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"vmstool: visual memory schema analysis", "vmstool"};
  app.require_subcommand(1);

  ScheduleArgs sched;
  auto* c_sched = app.add_subcommand("schedule", "Generate a seeded two-stage experiment schedule");
  c_sched->add_option("--manifest", sched.manifest, "Dataset manifest")->required();
  c_sched->add_option("--out", sched.out, "Output directory")->required();
  c_sched->add_option("--seed", sched.seed, "Schedule seed");

  BuildArgs build;
  auto* c_build = app.add_subcommand("build-maps", "Build VMS tensors per image");
  add_map_options(c_build, build.maps, false);
  c_build->add_option("--out", build.out, "Output directory")->required();
  c_build->add_option("--seed", build.seed, "Seed recorded in the stamp");
  c_build->add_flag("--pgm", build.pgm, "Also export 16-bit PGM previews");

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "HR/FAR table, threshold curve, ROC, AUC and d'");
  c_stats->add_option("--logs", stats.logs, "Directory of session logs")->required();
  c_stats->add_option("--manifest", stats.manifest, "Dataset manifest (adds category table)");
  c_stats->add_option("--out", stats.out, "Output directory")->required();
  c_stats->add_option("--threshold", stats.threshold, "Analysis threshold");
  c_stats->add_option("--floor", stats.floor, "Lowest threshold searched");
  c_stats->add_option("--cutoff", stats.cutoff, "rho cutoff for threshold selection");
  c_stats->add_flag("--exclusive", stats.exclusive, "Require ratings strictly above the threshold");
  c_stats->add_flag("--include-incomplete", stats.include_incomplete, "Keep sessions flagged incomplete");
  c_stats->add_option("--seed", stats.seed, "Seed recorded in the stamp");

  ConsistencyArgs cons;
  auto* c_cons = app.add_subcommand("consistency", "Split-half consistency of VMS maps");
  add_map_options(c_cons, cons.maps, false);
  c_cons->add_option("--out", cons.out, "Output directory")->required();
  c_cons->add_option("--metric", cons.metric, "pearson2d|mi");
  c_cons->add_option("--splits", cons.splits, "Number of random participant splits");
  c_cons->add_option("--bins", cons.bins, "MI bins per axis");
  c_cons->add_option("--versus", cons.versus, "Second VMS kind for a paired bootstrap test");
  c_cons->add_option("--n-boot", cons.n_boot, "Bootstrap resamples");
  c_cons->add_option("--seed", cons.seed, "Split and bootstrap seed");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Compare VMS maps with saliency or fixation maps");
  add_map_options(c_cmp, cmp.maps, true);
  c_cmp->add_option("--out", cmp.out, "Output directory")->required();
  c_cmp->add_option("--against", cmp.against, "saliency|fixations");
  c_cmp->add_option("--metric", cmp.metric, "pearson2d|mi");
  c_cmp->add_option("--bins", cmp.bins, "MI bins per axis");
  c_cmp->add_option("--seed", cmp.seed, "Seed recorded in the stamp");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict-mem", "Memorability prediction protocol with map-weighted pooling");
  c_pred->add_option("--logs", pred.logs, "Directory of session logs")->required();
  c_pred->add_option("--manifest", pred.manifest, "Dataset manifest")->required();
  c_pred->add_option("--out", pred.out, "Output directory")->required();
  c_pred->add_option("--weight", pred.weight, "none|vms|saliency|fixations");
  c_pred->add_option("--features", pred.features, "Comma-separated descriptor names");
  c_pred->add_option("--kernel", pred.kernels, "Kernel override NAME=rbf|hik (repeatable)");
  c_pred->add_option("--splits", pred.splits, "Random image/participant splits");
  c_pred->add_option("--threshold", pred.threshold, "Analysis threshold for HR and VMS");
  c_pred->add_option("--C", pred.C, "SVR C");
  c_pred->add_option("--epsilon", pred.epsilon, "SVR epsilon");
  c_pred->add_flag("--grid-search", pred.grid_search, "3-fold search over C and epsilon");
  c_pred->add_flag("--include-incomplete", pred.include_incomplete, "Keep sessions flagged incomplete");
  c_pred->add_option("--seed", pred.seed, "Split seed");

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Materialize 10 augmented variants per image with 20x20 targets");
  add_map_options(c_aug, aug.maps, true);
  c_aug->add_option("--out", aug.out, "Output directory")->required();
  c_aug->add_option("--seed", aug.seed, "Seed recorded in the stamp");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train-recon", "Train the VMS reconstruction head on exported features");
  c_tr->add_option("--dataset", tr.dataset, "Directory produced by augment (with features/<layer>/)")->required();
  c_tr->add_option("--layer", tr.layer, "Feature layer name")->required();
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_option("--loss", tr.loss, "l1|l2");
  c_tr->add_option("--epochs", tr.epochs, "Epochs");
  c_tr->add_option("--lr", tr.lr, "Learning rate");
  c_tr->add_option("--momentum", tr.momentum, "Momentum");
  c_tr->add_option("--weight-decay", tr.weight_decay, "Weight decay");
  c_tr->add_option("--batch", tr.batch, "Batch size");
  c_tr->add_option("--folds", tr.folds, "Number of stratified folds");
  c_tr->add_option("--fold", tr.fold, "Run only this fold (default: all)");
  c_tr->add_option("--seed", tr.seed, "Initialization, shuffling and fold seed");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval-recon", "Evaluate a trained head against 20x20 targets");
  c_ev->add_option("--dataset", ev.dataset, "Directory produced by augment")->required();
  c_ev->add_option("--layer", ev.layer, "Feature layer name")->required();
  c_ev->add_option("--params", ev.params, "Parameter bundle stem (without extension)")->required();
  c_ev->add_option("--out", ev.out, "Output directory")->required();
  c_ev->add_flag("--all-variants", ev.all_variants, "Evaluate every variant, not only identity ones");
  c_ev->add_option("--seed", ev.seed, "Seed recorded in the stamp");

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "HTTP endpoint receiving session logs");
  c_srv->add_option("--sessions-dir", srv.sessions_dir, "Where sessions are stored (env VMS_SESSIONS_DIR wins)");
  c_srv->add_option("--manifest", srv.manifest, "Manifest served at GET /api/v1/manifest");
  c_srv->add_option("--host", srv.host, "Bind address");
  c_srv->add_option("--port", srv.port, "Port (0 = any free port)");
  c_srv->add_option("--token", srv.token, "Require this X-VMS-Token header");
  c_srv->add_option("--max-bytes", srv.max_bytes, "Largest accepted request body");
  c_srv->add_option("--seed", srv.seed, "Unused; accepted for uniformity");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (c_sched->parsed()) return cmd_schedule(sched);
    if (c_build->parsed()) return cmd_build_maps(build);
    if (c_stats->parsed()) return cmd_stats(stats);
    if (c_cons->parsed()) return cmd_consistency(cons);
    if (c_cmp->parsed()) return cmd_compare(cmp);
    if (c_pred->parsed()) return cmd_predict_mem(pred);
    if (c_aug->parsed()) return cmd_augment(aug);
    if (c_tr->parsed()) return cmd_train_recon(tr);
    if (c_ev->parsed()) return cmd_eval_recon(ev);
    if (c_srv->parsed()) return cmd_serve(srv);
  } catch (const vms::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace vmstool
