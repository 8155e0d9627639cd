#pragma once

// Command-line driver. Every subcommand that writes files puts them under
// --out and records them in <out>/manifest.json with a content hash and the
// hash of the configuration that produced them.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obdaml/dataset.hpp"
#include "obdaml/detail/hash.hpp"
#include "obdaml/http.hpp"
#include "obdaml/kbmap.hpp"
#include "obdaml/model_io.hpp"
#include "obdaml/pipeline.hpp"
#include "obdaml/service.hpp"
#include "obdaml/sweep.hpp"
#include "obdaml/synthetic.hpp"

namespace obdaml {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace cli {

namespace fs = std::filesystem;

struct Options {
  std::string data;
  std::string hierarchies;  // directory holding bl0.txt, bl1.txt, bl2.txt
  std::string out;
  std::string level = "BL1";
  std::string model = "nb";
  std::string modes = "flat,dynamic";
  std::string train_mode = "dynamic";
  std::optional<std::size_t> v;
  std::size_t min_support = 10;
  std::string root_policy = "keep";
  double alpha = kDefaultAlpha;
  std::size_t trees = kDefaultTrees;
  std::optional<std::size_t> max_depth;
  std::size_t rf_vocab_cap = kDefaultRfVocabularyCap;
  std::vector<std::string> stop_patterns;
  std::uint64_t seed = 42;
  double validation_fraction = 0.20;
  std::size_t threads = 1;
  std::string grid = "0:200:10";
  std::optional<double> t;
  double epsilon = 0.01;
  bool plot = false;
  std::string external;
  std::string config;
  std::optional<std::size_t> records;
  std::optional<std::uint64_t> generator_seed;
  std::vector<std::string> model_files;
  std::vector<std::string> prediction_files;  // LEVEL=path
  std::string split = "all";
  std::string context;
  std::string triples;
  std::string class_code;
  bool subclasses = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string corrections;
  std::vector<std::string> report_files;
};

inline void write_text(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot write '" + p.string() + "'");
  f << content;
  if (!f) throw Error(Errc::IoError, "write to '" + p.string() + "' failed");
}

/// Writes artifacts and keeps the manifest in sync.
class OutputDir {
 public:
  OutputDir(std::string dir, std::string command, nlohmann::json config)
      : dir_(std::move(dir)), command_(std::move(command)), config_(std::move(config)) {
    if (dir_.empty()) throw Error(Errc::InvalidArgument, "--out is required");
    fs::create_directories(dir_);
  }

  std::string write(const std::string& name, const std::string& content) {
    fs::path p = fs::path(dir_) / name;
    write_text(p, content);
    written_[name] = detail::hex64(detail::fnv1a64(content));
    return p.string();
  }

  void finish() {
    fs::path mp = fs::path(dir_) / "manifest.json";
    nlohmann::json m = nlohmann::json::object();
    if (fs::exists(mp)) {
      try {
        m = nlohmann::json::parse(csv::read_file(mp.string()));
      } catch (const nlohmann::json::exception&) {
        m = nlohmann::json::object();
      }
    }
    if (!m.contains("artifacts")) m["artifacts"] = nlohmann::json::object();
    if (!m.contains("configs")) m["configs"] = nlohmann::json::object();
    const std::string ch = config_hash(config_);
    m["configs"][ch] = {{"command", command_}, {"config", config_}};
    for (const auto& [name, hash] : written_) {
      m["artifacts"][name] = {{"content_hash", hash}, {"command", command_}, {"config_hash", ch}};
    }
    write_text(mp, m.dump(2) + "\n");
  }

 private:
  std::string dir_;
  std::string command_;
  nlohmann::json config_;
  std::map<std::string, std::string> written_;
};

inline std::string hierarchy_file(BreakdownLevel l) {
  std::string s = to_string(l);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s + ".txt";
}

inline HierarchySet load_hierarchies(const Options& o) {
  std::string dir = o.hierarchies;
  if (dir.empty()) dir = o.data.empty() ? "." : fs::path(o.data).parent_path().string();
  if (dir.empty()) dir = ".";
  HierarchySet hs;
  bool any = false;
  for (auto l : kAllLevels) {
    fs::path p = fs::path(dir) / hierarchy_file(l);
    if (fs::exists(p)) {
      hs[index_of(l)] = load_hierarchy(p.string(), l);
      any = true;
    }
  }
  if (!any) throw Error(Errc::IoError, "no bl0.txt, bl1.txt or bl2.txt found in '" + dir + "'");
  return hs;
}

inline Dataset load_dataset(const Options& o, const HierarchySet& hs) {
  if (o.data.empty()) throw Error(Errc::InvalidArgument, "--data is required");
  auto ingested = ingest_csv(o.data, hs);
  if (!ingested.rejects.empty()) {
    std::cerr << "warning: " << ingested.rejects.size() << " row(s) rejected during ingestion\n";
  }
  SplitOptions so;
  so.seed = o.seed;
  so.validation_fraction = o.validation_fraction;
  return split_dataset(std::move(ingested.dataset), so);
}

inline ModelConfig model_config(const Options& o) {
  ModelConfig m;
  m.kind = parse_model_kind(o.model);
  if (!(o.alpha > 0.0)) throw Error(Errc::InvalidArgument, "--alpha must be positive");
  m.alpha = o.alpha;
  m.rf.n_trees = o.trees;
  m.rf.seed = o.seed;
  m.rf.max_depth = o.max_depth;
  m.rf.threads = o.threads;
  m.rf_vocabulary_cap = o.rf_vocab_cap == 0 ? std::nullopt : std::optional<std::size_t>(o.rf_vocab_cap);
  m.cleaning.stop_patterns = o.stop_patterns;
  return m;
}

inline RollupConfig rollup_config(const Options& o) {
  RollupConfig r;
  r.v = o.v.value_or(0);
  r.min_support = o.min_support;
  r.root_policy = parse_root_policy(o.root_policy);
  return r;
}

inline nlohmann::json common_config(const Options& o) {
  return {{"data", o.data.empty() ? "" : detail::hex64(detail::fnv1a64(csv::read_file(o.data)))},
          {"level", o.level},
          {"model", o.model},
          {"seed", o.seed},
          {"validation_fraction", o.validation_fraction},
          {"min_support", o.min_support},
          {"root_policy", o.root_policy},
          {"alpha", o.alpha},
          {"trees", o.trees},
          {"rf_vocab_cap", o.rf_vocab_cap},
          {"stop_patterns", o.stop_patterns}};
}

inline const Hierarchy& level_hierarchy(const HierarchySet& hs, BreakdownLevel l) {
  if (!hs[index_of(l)]) throw Error(Errc::UnknownClass, "no hierarchy file for " + to_string(l));
  return *hs[index_of(l)];
}

inline std::optional<ExternalPredictions> external_predictions(const Options& o, const Dataset& ds) {
  if (o.external.empty()) return std::nullopt;
  std::set<std::string> keys;
  for (const auto& r : ds.records) keys.insert(r.key());
  auto ext = load_external_predictions(o.external, keys);
  if (!ext.unknown_keys.empty()) {
    std::cerr << "warning: " << ext.unknown_keys.size() << " external prediction(s) reference unknown records\n";
  }
  return ext;
}

inline std::string tag(const Options& o) { return o.level + "_" + o.model; }

// ---------------------------------------------------------------------------

inline int cmd_generate(const Options& o) {
  if (o.config.empty()) throw Error(Errc::InvalidArgument, "--config is required");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(o.config));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigInvalid, o.config + ": " + e.what());
  }
  auto base = fs::path(o.config).parent_path().string();
  auto cfg = synth_config_from_json(j, base.empty() ? "." : base);
  if (o.records) cfg.n_records = *o.records;
  if (o.generator_seed) cfg.seed = *o.generator_seed;
  nlohmann::json used = j;
  used["seed"] = cfg.seed;
  used["n_records"] = cfg.n_records;
  OutputDir out(o.out, "generate", used);
  auto ds = generate_synthetic(cfg);
  out.write("dataset.csv", format_dataset_csv(ds));
  for (auto l : kAllLevels)
    if (cfg.hierarchy[index_of(l)]) out.write(hierarchy_file(l), format_hierarchy(*cfg.hierarchy[index_of(l)]));
  out.finish();
  std::cout << "generated " << ds.size() << " records (seed " << cfg.seed << ") in " << o.out << "\n";
  return kExitOk;
}

inline int cmd_ingest(const Options& o) {
  auto hs = load_hierarchies(o);
  if (o.data.empty()) throw Error(Errc::InvalidArgument, "--data is required");
  auto res = ingest_csv(o.data, hs);
  OutputDir out(o.out, "ingest", common_config(o));
  out.write("dataset.csv", format_dataset_csv(res.dataset));
  out.write("rejects.csv", format_rejects_csv(res.rejects));
  for (auto l : kAllLevels)
    if (hs[index_of(l)]) out.write(hierarchy_file(l), format_hierarchy(*hs[index_of(l)]));
  auto ds = split_dataset(res.dataset, {o.validation_fraction, o.seed, std::nullopt});
  std::ostringstream split;
  split << "record_key,split\n";
  for (std::size_t i = 0; i < ds.size(); ++i) split << ds.records[i].key() << ',' << to_string(ds.split[i]) << '\n';
  out.write("split.csv", split.str());
  out.finish();
  std::cout << "ingested " << res.dataset.size() << " records, rejected " << res.rejects.size() << "\n";
  for (auto l : kAllLevels) {
    if (!hs[index_of(l)]) continue;
    auto c = class_counts(ds, l, Split::Train);
    std::cout << "  " << to_string(l) << ": " << c.counts.size() << " classes, " << c.total()
              << " labeled training records\n";
  }
  return kExitOk;
}

inline int cmd_rollup(const Options& o) {
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  auto level = parse_level(o.level);
  auto rc = rollup_config(o);
  auto r = compute_rollup(class_counts(ds, level, Split::Train), level_hierarchy(hs, level), rc);
  auto cfg = common_config(o);
  cfg["v"] = rc.v;
  OutputDir out(o.out, "rollup", cfg);
  auto summary = format_summary(mapping_summary(r.mapping, r.audit));
  out.write("mapping_" + o.level + ".csv", format_mapping_csv(r.mapping));
  out.write("audit_" + o.level + ".csv", format_audit_csv(r.audit));
  out.write("rollup_summary_" + o.level + ".txt", summary);
  out.finish();
  std::cout << summary;
  return kExitOk;
}

/// Resolves the dynamic-mode v: explicit --v, else the sweep selection for
/// --t, else the best sweep point.
inline std::size_t resolve_v(const Options& o, const Dataset& ds, const Hierarchy& h, const ModelConfig& mc,
                             const ExternalPredictions* ext, std::vector<SweepPoint>* points = nullptr) {
  if (o.v) return *o.v;
  SweepConfig sc;
  sc.level = parse_level(o.level);
  sc.model = mc;
  sc.grid = parse_grid(o.grid);
  sc.t = o.t.value_or(1.0);
  sc.epsilon = o.epsilon;
  sc.seed = o.seed;
  sc.min_support = o.min_support;
  sc.root_policy = parse_root_policy(o.root_policy);
  auto pts = run_sweep(ds, h, sc, ext);
  std::optional<std::size_t> sel;
  if (o.t) sel = select_threshold(pts, *o.t, o.epsilon);
  std::size_t v = sel ? *sel : best_point(pts)->v;
  if (points) *points = pts;
  return v;
}

inline int cmd_train(const Options& o) {
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  auto level = parse_level(o.level);
  const auto& h = level_hierarchy(hs, level);
  auto mc = model_config(o);
  if (mc.kind == ModelKind::External) throw Error(Errc::InvalidArgument, "external models cannot be trained");
  auto mode = parse_mode(o.train_mode);
  ExperimentConfig ec{level, mode, mc, rollup_config(o)};
  if (mode == EvalMode::Dynamic) ec.rollup.v = resolve_v(o, ds, h, mc, nullptr);
  auto features = build_features(ds, mc.vocabulary_cap(), mc.cleaning);
  auto r = run_experiment(ds, h, ec, features);
  ModelArtifact a{level, mode, ec.rollup, mc, features.vocabulary, r.rollup.mapping, *r.model};
  if (mode == EvalMode::Flat) a.rollup.v = 0;
  auto cfg = config_to_json(a);
  OutputDir out(o.out, "train", cfg);
  const std::string name = "model_" + tag(o) + "_" + to_string(mode) + ".json";
  out.write(name, artifact_to_json(a).dump() + "\n");
  out.finish();
  std::cout << "trained " << to_string(mc.kind) << " on " << r.n_train << " records, "
            << r.rollup.mapping.retained.counts.size() << " classes (v=" << a.rollup.v << "), validation macro-F1 "
            << detail::fixed(r.report.macro.f1, 4) << "\n"
            << "artifact: " << (fs::path(o.out) / name).string() << "\n";
  return kExitOk;
}

inline int cmd_eval(const Options& o) {
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  auto level = parse_level(o.level);
  const auto& h = level_hierarchy(hs, level);
  auto mc = model_config(o);
  auto ext = external_predictions(o, ds);
  if (mc.kind == ModelKind::External && !ext) throw Error(Errc::InvalidArgument, "--model external needs --external");
  const ExternalPredictions* extp = ext ? &*ext : nullptr;

  std::vector<EvalMode> modes;
  std::stringstream ss(o.modes);
  for (std::string m; std::getline(ss, m, ',');) modes.push_back(parse_mode(m));
  if (modes.empty()) throw Error(Errc::InvalidArgument, "--mode needs flat, dynamic or both");

  auto features = build_features(ds, mc.vocabulary_cap(), mc.cleaning);
  auto cfg = common_config(o);
  cfg["modes"] = o.modes;
  std::vector<SweepPoint> points;
  std::optional<std::size_t> dyn_v;
  for (auto m : modes)
    if (m == EvalMode::Dynamic) dyn_v = resolve_v(o, ds, h, mc, extp, &points);
  if (dyn_v) cfg["v"] = *dyn_v;
  OutputDir out(o.out, "eval", cfg);

  std::map<EvalMode, EvalReport> reports;
  for (auto m : modes) {
    ExperimentConfig ec{level, m, mc, rollup_config(o)};
    if (m == EvalMode::Dynamic) ec.rollup.v = *dyn_v;
    auto r = run_experiment(ds, h, ec, features, extp);
    const std::string stem = tag(o) + "_" + to_string(m);
    out.write("report_" + stem + ".json", report_to_json(r.report).dump(2) + "\n");
    out.write("predictions_" + stem + ".csv", format_predictions_csv(r.predictions));
    reports[m] = std::move(r.report);
  }
  if (!points.empty()) out.write("sweep_" + tag(o) + ".csv", format_sweep_csv(points));

  std::vector<const EvalReport*> rs;
  for (const auto& [_, r] : reports) rs.push_back(&r);
  std::string text = format_report_table(rs);
  if (dyn_v) text += "dynamic v = " + std::to_string(*dyn_v) + "\n";
  if (reports.count(EvalMode::Flat) && reports.count(EvalMode::Dynamic)) {
    auto c = compare(reports[EvalMode::Flat], reports[EvalMode::Dynamic]);
    out.write("comparison_" + tag(o) + ".json", comparison_to_json(c).dump(2) + "\n");
    text += "\n" + format_comparison(c);
  }
  out.write("eval_" + tag(o) + ".txt", text);
  out.finish();
  std::cout << text;
  return kExitOk;
}

inline int cmd_sweep(const Options& o) {
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  auto level = parse_level(o.level);
  auto mc = model_config(o);
  auto ext = external_predictions(o, ds);
  if (mc.kind == ModelKind::External && !ext) throw Error(Errc::InvalidArgument, "--model external needs --external");
  SweepConfig sc;
  sc.level = level;
  sc.model = mc;
  sc.grid = parse_grid(o.grid);
  sc.t = o.t.value_or(0.85);
  sc.epsilon = o.epsilon;
  sc.seed = o.seed;
  sc.min_support = o.min_support;
  sc.root_policy = parse_root_policy(o.root_policy);
  auto pts = run_sweep(ds, level_hierarchy(hs, level), sc, ext ? &*ext : nullptr);
  auto sel = select_threshold(pts, sc.t, sc.epsilon);
  auto best = best_point(pts);

  auto cfg = common_config(o);
  cfg["grid"] = o.grid;
  cfg["t"] = sc.t;
  cfg["epsilon"] = sc.epsilon;
  OutputDir out(o.out, "sweep", cfg);
  auto csv_text = format_sweep_csv(pts);
  out.write("sweep_" + tag(o) + ".csv", csv_text);
  if (o.plot) {
    out.write("sweep_" + tag(o) + ".svg",
              sweep_svg(pts, "Macro-F1 vs v (" + o.level + ", " + o.model + ")", sel ? sel : best->v));
  }
  nlohmann::json result{{"t", sc.t},
                        {"epsilon", sc.epsilon},
                        {"selected_v", sel ? nlohmann::json(*sel) : nlohmann::json(nullptr)},
                        {"best_v", best->v},
                        {"best_macro_f1", best->macro_f1}};
  out.write("sweep_" + tag(o) + "_selection.json", result.dump(2) + "\n");
  out.finish();
  std::cout << csv_text;
  if (sel) {
    std::cout << "selected v = " << *sel << " (t=" << sc.t << ", epsilon=" << sc.epsilon << ")\n";
  } else {
    std::cout << "selected v = none (no point reaches t=" << sc.t << "); best v = " << best->v << " (macro-F1 "
              << detail::fixed(best->macro_f1, 4) << ")\n";
  }
  return kExitOk;
}

inline std::optional<Split> split_filter(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return Split::Train;
  if (s == "validation") return Split::Validation;
  throw Error(Errc::InvalidArgument, "--split must be all, train or validation");
}

inline int cmd_classify(const Options& o) {
  if (o.model_files.size() != 1) throw Error(Errc::InvalidArgument, "classify needs exactly one --model-file");
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  auto a = load_artifact(o.model_files.front());
  auto preds = classify_records(a, ds, split_filter(o.split));
  auto cfg = config_to_json(a);
  cfg["split"] = o.split;
  OutputDir out(o.out, "classify", cfg);
  const std::string name = "predictions_" + to_string(a.level) + "_" + to_string(a.config.kind) + ".csv";
  out.write(name, format_predictions_csv(preds));
  out.finish();
  std::cout << "classified " << preds.size() << " records -> " << (fs::path(o.out) / name).string() << "\n";
  return kExitOk;
}

inline MappingContext load_context(const Options& o) {
  if (o.context.empty()) return {};
  try {
    return context_from_json(nlohmann::json::parse(csv::read_file(o.context)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidContext, o.context + ": " + e.what());
  }
}

inline int cmd_map(const Options& o) {
  if (o.model_files.empty() && o.prediction_files.empty()) {
    throw Error(Errc::InvalidArgument, "map needs --model-file or --predictions");
  }
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  auto ctx = load_context(o);
  std::map<std::string, LevelCodes> codes;
  nlohmann::json cfg{{"base_iri", ctx.base_iri}, {"vocab_prefix", ctx.vocab_prefix}, {"class_prefix", ctx.class_prefix}};
  for (const auto& path : o.model_files) {
    auto a = load_artifact(path);
    for (const auto& p : classify_records(a, ds)) codes[p.record_key][a.level] = p.predicted;
    cfg["models"].push_back(artifact_to_json(a)["config_hash"]);
  }
  std::set<std::string> keys;
  for (const auto& r : ds.records) keys.insert(r.key());
  for (const auto& spec : o.prediction_files) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidArgument, "--predictions expects LEVEL=path");
    auto level = parse_level(spec.substr(0, eq));
    auto ext = load_external_predictions(spec.substr(eq + 1), keys);
    for (const auto& p : ext.predictions) codes[p.record_key][level] = p.predicted;
    cfg["predictions"].push_back(detail::hex64(detail::fnv1a64(csv::read_file(spec.substr(eq + 1)))));
  }
  auto mapped = map_records(ds, codes, ctx);
  for (const auto& c : mapped.collisions) std::cerr << "warning: IRI collision: " << c << "\n";
  OutputDir out(o.out, "map", cfg);
  out.write("triples.nt", format_ntriples(mapped.store));
  out.finish();
  std::cout << "mapped " << codes.size() << " records to " << mapped.store.size() << " triples -> "
            << (fs::path(o.out) / "triples.nt").string() << "\n";
  return kExitOk;
}

inline int cmd_query(const Options& o) {
  if (o.triples.empty()) throw Error(Errc::InvalidArgument, "--triples is required");
  auto ts = parse_ntriples(o.triples);
  auto ctx = load_context(o);
  auto code = ClassCode::parse(o.class_code);
  std::optional<Hierarchy> h;
  if (!o.hierarchies.empty()) {
    auto hs = load_hierarchies(o);
    h = hs[index_of(parse_level(o.level))];
  }
  if (!h) {
    // Without a hierarchy file, the classes present in the store form one.
    std::vector<ClassCode> present{code};
    for (const auto& t : ts.match(std::nullopt, ctx.classified_as(), std::nullopt))
      if (auto c = ctx.code_of(t.object)) present.push_back(*c);
    h = Hierarchy::from_codes(BreakdownLevel::BL2, present);
  }
  auto subjects = query_classified_as(ts, code, o.subclasses, *h, ctx);
  std::string text;
  for (const auto& s : subjects) text += s.str() + "\n";
  if (!o.out.empty()) {
    OutputDir out(o.out, "query",
                  {{"triples", detail::hex64(detail::fnv1a64(csv::read_file(o.triples)))},
                   {"class", code.str()},
                   {"subclasses", o.subclasses}});
    out.write("query_" + code.str() + (o.subclasses ? "_sub" : "") + ".txt", text);
    out.finish();
  }
  std::cout << text;
  return kExitOk;
}

inline int cmd_report(const Options& o) {
  std::vector<std::string> files = o.report_files;
  if (files.empty() && !o.out.empty() && fs::exists(o.out)) {
    for (const auto& e : fs::directory_iterator(o.out)) {
      auto n = e.path().filename().string();
      if (n.rfind("report_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path().string());
    }
  }
  if (files.empty()) throw Error(Errc::InvalidArgument, "report needs --report files or an --out holding report_*.json");
  std::sort(files.begin(), files.end());
  std::map<std::tuple<std::string, std::string>, std::map<EvalMode, EvalReport>> groups;
  for (const auto& f : files) {
    EvalReport r;
    try {
      r = report_from_json(nlohmann::json::parse(csv::read_file(f)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::ParseError, f + ": " + e.what());
    }
    groups[{to_string(r.level), r.model_id}][r.mode] = std::move(r);
  }
  std::string text;
  for (auto& [key, reps] : groups) {
    std::vector<const EvalReport*> rs;
    for (const auto& [_, r] : reps) rs.push_back(&r);
    text += format_report_table(rs);
    if (reps.count(EvalMode::Flat) && reps.count(EvalMode::Dynamic))
      text += "\n" + format_comparison(compare(reps[EvalMode::Flat], reps[EvalMode::Dynamic]));
    text += "\n";
  }
  std::cout << text;
  return kExitOk;
}

inline int cmd_serve(const Options& o) {
  auto hs = load_hierarchies(o);
  auto ds = load_dataset(o, hs);
  ServiceOptions so;
  so.model = model_config(o);
  so.rollup = rollup_config(o);
  so.sweep.grid = parse_grid(o.grid);
  so.sweep.t = o.t.value_or(0.85);
  so.sweep.epsilon = o.epsilon;
  if (!o.corrections.empty()) so.corrections_path = o.corrections;
  if (!o.static_dir.empty()) so.static_dir = o.static_dir;
  so.external = external_predictions(o, ds);
  Service svc(std::move(ds), hs, so);
  auto level = parse_level(o.level);
  std::stringstream ss(o.model);
  for (std::string m; std::getline(ss, m, ',');) {
    auto s = svc.retrain(level, parse_model_kind(m), o.v);
    std::cerr << "trained " << m << " for " << o.level << ": v=" << s.v << ", macro-F1 "
              << detail::fixed(s.after_macro_f1, 4) << "\n";
  }
  HttpServer server(svc);
  std::cerr << "listening on http://" << o.host << ":" << o.port << "\n";
  server.run(o.host, o.port);
  return kExitOk;
}

}  // namespace cli

/// Parses argv and runs one subcommand.
inline int cli_dispatch(int argc, const char* const* argv) {
  using namespace cli;
  Options o;
  CLI::App app{"Dynamic class management for hierarchical component classification", "obdaml"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto data = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Records CSV (record_id,plant_id,description[,bl0,bl1,bl2])");
    c->add_option("--hierarchies", o.hierarchies, "Directory with bl0.txt/bl1.txt/bl2.txt (default: beside --data)");
    c->add_option("--seed", o.seed, "Seed for the split and the models")->capture_default_str();
    c->add_option("--validation-fraction", o.validation_fraction)->capture_default_str();
  };
  auto out = [&](CLI::App* c, bool required = true) {
    auto* opt = c->add_option("--out", o.out, "Output directory");
    if (required) opt->required();
  };
  auto level = [&](CLI::App* c) {
    c->add_option("--level", o.level, "Breakdown level (BL0, BL1, BL2)")->capture_default_str();
  };
  auto rollup = [&](CLI::App* c) {
    c->add_option("--v", o.v, "Rollup threshold v");
    c->add_option("--min-support", o.min_support)->capture_default_str();
    c->add_option("--root-policy", o.root_policy, "keep or discard")->capture_default_str();
  };
  auto model = [&](CLI::App* c) {
    c->add_option("--model", o.model, "nb, rf or external")->capture_default_str();
    c->add_option("--alpha", o.alpha, "Naive Bayes smoothing")->capture_default_str();
    c->add_option("--trees", o.trees, "Random Forest size")->capture_default_str();
    c->add_option("--max-depth", o.max_depth, "Random Forest depth limit");
    c->add_option("--rf-vocab-cap", o.rf_vocab_cap, "Random Forest vocabulary cap (0 = none)")->capture_default_str();
    c->add_option("--stop-pattern", o.stop_patterns, "Regex removed from descriptions before tokenizing");
    c->add_option("--external", o.external, "External predictions CSV");
    c->add_option("--threads", o.threads, "Worker threads for tree training")->capture_default_str();
  };
  auto sweep_opts = [&](CLI::App* c) {
    c->add_option("--grid", o.grid, "start:end:step")->capture_default_str();
    c->add_option("--t", o.t, "Target macro-F1");
    c->add_option("--epsilon", o.epsilon)->capture_default_str();
  };

  auto* gen = app.add_subcommand("generate", "Generate a synthetic labeled corpus");
  gen->add_option("--config", o.config, "Synthetic corpus config JSON")->required();
  gen->add_option("--seed", o.generator_seed, "Generator seed (overrides the config)");
  gen->add_option("--records", o.records, "Override the record count");
  out(gen);

  auto* ing = app.add_subcommand("ingest", "Validate and normalize a records CSV");
  data(ing);
  out(ing);

  auto* rol = app.add_subcommand("rollup", "Compute the label mapping for threshold v");
  data(rol);
  level(rol);
  rollup(rol);
  out(rol);

  auto* trn = app.add_subcommand("train", "Train a model and save its artifact");
  data(trn);
  level(trn);
  rollup(trn);
  model(trn);
  sweep_opts(trn);
  trn->add_option("--mode", o.train_mode, "flat or dynamic")->capture_default_str();
  out(trn);

  auto* evl = app.add_subcommand("eval", "Evaluate flat and/or dynamic classification");
  data(evl);
  level(evl);
  rollup(evl);
  model(evl);
  sweep_opts(evl);
  evl->add_option("--mode", o.modes, "flat, dynamic or flat,dynamic")->capture_default_str();
  out(evl);

  auto* swp = app.add_subcommand("sweep", "Macro-F1 across a grid of thresholds v");
  data(swp);
  level(swp);
  rollup(swp);
  model(swp);
  sweep_opts(swp);
  swp->add_flag("--plot", o.plot, "Also write an SVG chart");
  out(swp);

  auto* cls = app.add_subcommand("classify", "Batch prediction with a saved model");
  data(cls);
  cls->add_option("--model-file", o.model_files, "Model artifact JSON")->required();
  cls->add_option("--split", o.split, "all, train or validation")->capture_default_str();
  out(cls);

  auto* map = app.add_subcommand("map", "Emit N-Triples for classified records");
  data(map);
  map->add_option("--model-file", o.model_files, "Model artifact(s) used to classify the records");
  map->add_option("--predictions", o.prediction_files, "LEVEL=predictions.csv");
  map->add_option("--context", o.context, "Mapping context JSON (base_iri, vocab_prefix, class_prefix)");
  out(map);

  auto* qry = app.add_subcommand("query", "Subjects classified as a class");
  qry->add_option("--triples", o.triples, "N-Triples file")->required();
  qry->add_option("--class", o.class_code, "Class code")->required();
  qry->add_flag("--subclasses", o.subclasses, "Include every class extending the code");
  qry->add_option("--hierarchies", o.hierarchies, "Directory with hierarchy files");
  level(qry);
  qry->add_option("--context", o.context, "Mapping context JSON");
  out(qry, false);

  auto* srv = app.add_subcommand("serve", "HTTP service for expert review and retraining");
  data(srv);
  level(srv);
  rollup(srv);
  model(srv);
  sweep_opts(srv);
  srv->add_option("--host", o.host)->capture_default_str();
  srv->add_option("--port", o.port)->capture_default_str();
  srv->add_option("--static", o.static_dir, "Directory served at /");
  srv->add_option("--corrections", o.corrections, "Corrections log (JSON lines)");

  auto* rep = app.add_subcommand("report", "Print report tables from saved JSON reports");
  rep->add_option("--report", o.report_files, "Report JSON file(s)");
  out(rep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*ing) return cmd_ingest(o);
    if (*rol) return cmd_rollup(o);
    if (*trn) return cmd_train(o);
    if (*evl) return cmd_eval(o);
    if (*swp) return cmd_sweep(o);
    if (*cls) return cmd_classify(o);
    if (*map) return cmd_map(o);
    if (*qry) return cmd_query(o);
    if (*srv) return cmd_serve(o);
    if (*rep) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::InvalidArgument ? kExitUsage : kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace obdaml
