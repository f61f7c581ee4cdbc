#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spancat/spancat.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spancat;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumeric = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  bool strict_labels = false;
  bool quiet = false;
};

Globals g;

void note(const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

ImportOptions import_options() { return ImportOptions{g.strict_labels}; }

Corpus load_corpus(const std::string& path, const TsvColumns* cols = nullptr) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".tsv" || ext == ".conll" || ext == ".conllu")
    return import_tsv(path, cols ? *cols : TsvColumns{}, import_options());
  return import_jsonl(path, import_options());
}

json config_json() { return g.config_path.empty() ? json::object() : read_json_file(g.config_path); }

ModelConfig model_config(const json& j) {
  ModelConfig m = model_config_from_json(j.value("model", json::object()));
  if (g.seed) m.seed = *g.seed;
  return m;
}

TrainConfig train_config(const json& j) {
  TrainConfig t = train_config_from_json(j.value("train", json::object()));
  if (g.seed) t.seed = *g.seed;
  return t;
}

std::uint64_t seed_or(std::uint64_t fallback) { return g.seed.value_or(fallback); }

std::optional<ExternalVectors> maybe_vectors(const std::string& path, const Corpus& corpus, const ModelConfig& m) {
  if (!m.encoder.uses_external()) return std::nullopt;
  if (path.empty()) throw DataError("encoder mode '" + encoder_mode_name(m.encoder) + "' needs --vectors");
  return load_external_vectors(path, corpus, m.encoder.external_dim);
}

const ExternalVectors* ptr(const std::optional<ExternalVectors>& v) { return v ? &*v : nullptr; }

std::string span_text(const Excerpt& e, const SpanAnnotation& s) {
  std::string out;
  for (int t = s.start; t < s.end && t < e.token_count(); ++t) {
    if (!out.empty()) out += ' ';
    out += e.tokens[t].surface;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

json summary_to_json(const std::vector<MetricSummary>& s) {
  json j = json::array();
  for (const auto& m : s)
    j.push_back({{"name", m.name}, {"mean", m.mean ? json(*m.mean) : json()}, {"min", m.min ? json(*m.min) : json()}});
  return j;
}

std::string summary_table(const std::vector<MetricSummary>& s) {
  std::vector<std::string> names;
  for (const auto& m : s) names.push_back(m.name);
  return render_table(names, summary_columns(s));
}

AuditCondition parse_condition(const std::string& s) {
  if (s == "span_must_exclude_prefix") return AuditCondition::SpanMustExcludePrefix;
  if (s == "span_crosses_sentence") return AuditCondition::SpanCrossesSentence;
  if (s == "label_unknown") return AuditCondition::LabelUnknown;
  throw DataError("unknown audit condition '" + s + "'");
}

// [{"id", "trigger": [...], "condition", "labels": [...]}]
std::vector<AuditRule> load_rules(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_array()) throw DataError("'" + path + "': expected an array of rules");
  std::vector<AuditRule> rules;
  try {
    for (const auto& r : j) {
      AuditRule rule;
      rule.id = r.at("id").get<std::string>();
      rule.trigger = r.at("trigger").get<std::vector<std::string>>();
      rule.condition = parse_condition(r.value("condition", std::string("span_must_exclude_prefix")));
      for (const auto& l : r.value("labels", json::array())) {
        auto parsed = parse_label(l.get<std::string>());
        if (!parsed) throw DataError("audit rule '" + rule.id + "': unknown label " + l.dump());
        rule.target_labels.push_back(*parsed);
      }
      rules.push_back(std::move(rule));
    }
  } catch (const json::exception& ex) {
    throw DataError("'" + path + "': " + ex.what());
  }
  return rules;
}

FoldSet load_manifest(const std::string& path) { return fold_set_from_json(read_json_file(path)); }

const Fold& pick_fold(const FoldSet& fs, int k) {
  if (k < 0 || k >= static_cast<int>(fs.folds.size()))
    throw DataError("fold " + std::to_string(k) + " not in manifest (" + std::to_string(fs.folds.size()) + " folds)");
  return fs.folds[static_cast<std::size_t>(k)];
}

json log_entry_json(const TrainLogEntry& e) {
  json j = {{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}};
  j["dev"] = e.dev ? json(e.dev->macro_f1) : json();
  return j;
}

// name=path pairs for named vector sets.
VectorSets load_vector_sets(const std::vector<std::string>& specs, const Corpus& corpus, int* dim) {
  VectorSets out;
  *dim = 0;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("--vectors expects name=path, got '" + spec + "'");
    std::ifstream in(spec.substr(eq + 1), std::ios::binary);
    if (!in) throw DataError("cannot open '" + spec.substr(eq + 1) + "'");
    int d = 0;
    read_vectors(in, &d);
    if (*dim && d != *dim) throw DataError("vector sets must share one dimension");
    *dim = d;
    out.emplace(spec.substr(0, eq), load_external_vectors(spec.substr(eq + 1), corpus, d));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spancat: span categorisation for metadiscourse annotation"};
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Seed for folds, sampling and training");
  app.add_option("--config", g.config_path, "JSON config with model/train/search sections")->check(CLI::ExistingFile);
  app.add_flag("--strict-labels", g.strict_labels, "Reject labels outside the scheme");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress on stderr");

  // import
  std::string imp_in, imp_out, imp_format = "auto";
  TsvColumns tsv;
  bool no_collapse = false;
  auto* imp = app.add_subcommand("import", "Convert JSONL or TSV to canonical JSONL");
  imp->add_option("input", imp_in)->required();
  imp->add_option("-o,--out", imp_out, "Output JSONL (default stdout)");
  imp->add_option("--format", imp_format)->check(CLI::IsMember({"auto", "jsonl", "tsv"}));
  imp->add_option("--surface-col", tsv.surface);
  imp->add_option("--label-col", tsv.labels);
  imp->add_option("--span-id-col", tsv.span_id);
  imp->add_option("--head-col", tsv.head);
  imp->add_option("--relation-col", tsv.relation);
  imp->add_option("--annotator", tsv.annotator);
  imp->add_option("--source", tsv.source);
  imp->add_flag("--no-collapse", no_collapse, "Keep fine-grained labels");

  // stats
  std::string st_in;
  bool st_json = false;
  auto* st = app.add_subcommand("stats", "Tag counts per label");
  st->add_option("corpus", st_in)->required();
  st->add_flag("--json", st_json);

  // audit
  std::string au_in, au_rules;
  auto* au = app.add_subcommand("audit", "Check annotation conventions");
  au->add_option("corpus", au_in)->required();
  au->add_option("--rules", au_rules, "Rule file (JSON)")->check(CLI::ExistingFile);

  // folds
  std::string fo_in, fo_out;
  auto* fo = app.add_subcommand("folds", "Write a five-fold manifest");
  fo->add_option("corpus", fo_in)->required();
  fo->add_option("-o,--out", fo_out)->required();

  // suggest-recall
  std::string sr_in, sr_annotator;
  int sr_max = 12;
  bool sr_no_subtrees = false;
  auto* sr = app.add_subcommand("suggest-recall", "Gold-span recall of the candidate suggester");
  sr->add_option("corpus", sr_in)->required();
  sr->add_option("--max-ngram", sr_max)->check(CLI::PositiveNumber);
  sr->add_flag("--no-subtrees", sr_no_subtrees);
  sr->add_option("--annotator", sr_annotator, "Restrict gold spans to one annotator");

  // train
  std::string tr_in, tr_manifest, tr_out, tr_vectors;
  int tr_fold = 0;
  auto* tr = app.add_subcommand("train", "Train on one fold, keep the best dev checkpoint");
  tr->add_option("corpus", tr_in)->required();
  tr->add_option("--fold-manifest", tr_manifest)->required()->check(CLI::ExistingFile);
  tr->add_option("--fold", tr_fold);
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--vectors", tr_vectors, "Per-excerpt external vectors");

  // cv
  std::string cv_in, cv_vectors, cv_json;
  int cv_folds = kNumFolds;
  auto* cv = app.add_subcommand("cv", "Five-fold cross-validation");
  cv->add_option("corpus", cv_in)->required();
  cv->add_option("--folds", cv_folds)->check(CLI::Range(1, kNumFolds));
  cv->add_option("--vectors", cv_vectors);
  cv->add_option("--json", cv_json, "Write fold reports and summary");

  // sweep
  std::string sw_in, sw_manifest, sw_out;
  std::vector<std::string> sw_vectors;
  int sw_trials = 10, sw_fold = 0;
  auto* sw = app.add_subcommand("sweep", "Random hyperparameter search on one split");
  sw->add_option("corpus", sw_in)->required();
  sw->add_option("--trials", sw_trials)->check(CLI::PositiveNumber);
  sw->add_option("--fold-manifest", sw_manifest)->check(CLI::ExistingFile);
  sw->add_option("--fold", sw_fold);
  sw->add_option("--vectors", sw_vectors, "name=path, repeatable");
  sw->add_option("-o,--out", sw_out, "Trial results (JSONL)");

  // evaluate
  std::string ev_gold, ev_pred, ev_annotator;
  bool ev_json = false;
  auto* ev = app.add_subcommand("evaluate", "Score predictions against gold");
  ev->add_option("--gold", ev_gold)->required();
  ev->add_option("--pred", ev_pred)->required();
  ev->add_option("--annotator", ev_annotator, "Gold annotator");
  ev->add_flag("--json", ev_json);

  // agree
  std::string ag_in, ag_a, ag_b;
  bool ag_json = false;
  auto* ag = app.add_subcommand("agree", "Agreement between two annotators");
  ag->add_option("corpus", ag_in)->required();
  ag->add_option("--a", ag_a)->required();
  ag->add_option("--b", ag_b)->required();
  ag->add_flag("--json", ag_json);

  // predict
  std::string pr_in, pr_model, pr_format = "ansi", pr_out, pr_vectors;
  std::optional<double> pr_threshold;
  auto* pr = app.add_subcommand("predict", "Tag a corpus with a trained model");
  pr->add_option("corpus", pr_in)->required();
  pr->add_option("--model", pr_model)->required()->check(CLI::ExistingFile);
  pr->add_option("--format", pr_format)->check(CLI::IsMember({"ansi", "html", "jsonl"}));
  pr->add_option("--threshold", pr_threshold)->check(CLI::Range(0.0, 1.0));
  pr->add_option("--vectors", pr_vectors);
  pr->add_option("-o,--out", pr_out);

  // synth
  std::string sy_out, sy_vectors;
  int sy_n = 500, sy_dim = 16;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic corpus");
  sy->add_option("-o,--out", sy_out)->required();
  sy->add_option("-n,--excerpts", sy_n)->check(CLI::PositiveNumber);
  sy->add_option("--vectors-out", sy_vectors, "Also write lookup vectors");
  sy->add_option("--dim", sy_dim)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*imp) {
      Corpus c;
      const std::string ext = fs::path(imp_in).extension().string();
      const bool as_tsv = imp_format == "tsv" || (imp_format == "auto" && (ext == ".tsv" || ext == ".conll"));
      c = as_tsv ? import_tsv(imp_in, tsv, import_options()) : import_jsonl(imp_in, import_options());
      if (!no_collapse) c = collapse_labels(std::move(c));
      if (imp_out.empty()) write_jsonl(std::cout, c);
      else export_jsonl(imp_out, c);
      const auto s = tag_stats(c);
      note("imported " + std::to_string(s.total_excerpts) + " excerpts, " + std::to_string(s.total_spans) + " spans");
    } else if (*st) {
      const auto s = tag_stats(load_corpus(st_in));
      if (st_json) {
        json j = {{"excerpts", s.total_excerpts}, {"tokens", s.total_tokens}, {"spans", s.total_spans}};
        for (std::size_t l = 0; l < kNumLabelValues; ++l)
          if (s.counts[l]) j["labels"][std::string(label_name(static_cast<Label>(l)))] = s.counts[l];
        std::cout << j.dump(2) << '\n';
      } else {
        for (std::size_t l = 0; l < kNumLabelValues; ++l)
          if (s.counts[l]) std::printf("%-10s %8zu\n", std::string(label_name(static_cast<Label>(l))).c_str(), s.counts[l]);
        std::printf("%-10s %8zu\nexcerpts %zu, tokens %zu\n", "Total", s.total_spans, s.total_excerpts, s.total_tokens);
      }
    } else if (*au) {
      const Corpus c = load_corpus(au_in);
      const auto rules = au_rules.empty() ? default_audit_rules() : load_rules(au_rules);
      const auto found = audit_conventions(c, rules);
      std::map<std::string, const Excerpt*> by_id;
      for (const auto& e : c) by_id.emplace(e.id, &e);
      for (const auto& f : found)
        std::cout << f.excerpt_id << '\t' << f.span.start << '\t' << f.span.end << '\t' << f.span.label_text()
                  << '\t' << f.rule_id << '\t' << span_text(*by_id.at(f.excerpt_id), f.span) << '\n';
      note(std::to_string(found.size()) + " finding(s)");
    } else if (*fo) {
      const FoldSet fs = make_folds(load_corpus(fo_in), seed_or(0));
      write_text(fo_out, fold_set_to_json(fs).dump(2) + "\n");
    } else if (*sr) {
      const SuggesterConfig cfg{sr_max, !sr_no_subtrees, true};
      const auto r = suggester_recall(load_corpus(sr_in), cfg, sr_annotator);
      std::printf("gold spans      %zu\nfound           %zu\nrecall          %.4f\ncandidates/exc  %.1f\n",
                  r.gold_spans, r.found, r.recall(), r.mean_candidates());
    } else if (*tr) {
      const json cj = config_json();
      const ModelConfig mc = model_config(cj);
      const TrainConfig tc = train_config(cj);
      const Corpus c = load_corpus(tr_in);
      const FoldSet manifest = load_manifest(tr_manifest);
      const Fold& fold = pick_fold(manifest, tr_fold);
      const auto vecs = maybe_vectors(tr_vectors, c, mc);
      fs::create_directories(tr_out);
      std::ofstream log(fs::path(tr_out) / "train_log.jsonl");
      if (!log) throw DataError("cannot write to '" + tr_out + "'");
      auto on_log = [&](const TrainLogEntry& e) {
        log << log_entry_json(e).dump() << '\n' << std::flush;
        char buf[128];
        std::snprintf(buf, sizeof buf, "step %6d  loss %.5f  lr %.3g  dev %s", e.step, e.loss, e.lr,
                      e.dev ? std::to_string(e.dev->macro_f1).c_str() : "-");
        note(buf);
      };
      TrainResult res = train_split_pipeline(c, fold, mc, tc, ptr(vecs), on_log);
      save_checkpoint((fs::path(tr_out) / "model.ckpt").string(), res.model);
      write_text((fs::path(tr_out) / "config.json").string(),
                 json{{"model", to_json(mc)}, {"train", to_json(tc)}}.dump(2) + "\n");
      std::printf("best step %d, dev macro F1 %.4f%s\n", res.best_step, std::max(0.0, res.best_dev_f1),
                  res.early_stopped ? " (early stop)" : "");
      const Corpus test = select(c, fold.test);
      if (auto rep = evaluate(res.model, test, ptr(vecs), tc.gold_annotator)) {
        std::cout << format_report(*rep, "test");
        write_text((fs::path(tr_out) / "test_report.json").string(), report_to_json(*rep).dump(2) + "\n");
      }
    } else if (*cv) {
      const json cj = config_json();
      const ModelConfig mc = model_config(cj);
      const TrainConfig tc = train_config(cj);
      const Corpus c = load_corpus(cv_in);
      FoldSet fs = make_folds(c, seed_or(0));
      fs.folds.resize(static_cast<std::size_t>(cv_folds));
      const auto vecs = maybe_vectors(cv_vectors, c, mc);
      const CvResult res = cross_validate(c, fs, mc, tc, ptr(vecs), [&](int f, const EvalReport& r) {
        note("fold " + std::to_string(f) + ": test macro F1 " + std::to_string(r.macro_f1));
      });
      std::cout << summary_table(res.summary);
      if (!cv_json.empty()) {
        json j = {{"summary", summary_to_json(res.summary)}, {"folds", json::array()}};
        for (std::size_t f = 0; f < res.fold_reports.size(); ++f)
          j["folds"].push_back({{"best_step", res.best_steps[f]}, {"test", report_to_json(res.fold_reports[f])}});
        write_text(cv_json, j.dump(2) + "\n");
      }
    } else if (*sw) {
      const json cj = config_json();
      const ModelConfig mc = model_config(cj);
      const TrainConfig tc = train_config(cj);
      SearchSpace space = search_space_from_json(cj.value("search", json::object()));
      const Corpus c = load_corpus(sw_in);
      int dim = 0;
      VectorSets sets = load_vector_sets(sw_vectors, c, &dim);
      if (sets.empty()) {
        std::erase(space.architectures, std::string("dual"));
        if (space.architectures.empty()) throw DataError("search space needs vectors for the dual architecture");
      } else {
        for (const auto& [name, _] : sets)
          if (std::find(space.encoder_sources.begin(), space.encoder_sources.end(), name) == space.encoder_sources.end())
            space.encoder_sources.push_back(name);
      }
      const FoldSet fs = sw_manifest.empty() ? make_folds(c, seed_or(0)) : load_manifest(sw_manifest);
      std::ofstream out;
      if (!sw_out.empty()) {
        out.open(sw_out);
        if (!out) throw DataError("cannot write '" + sw_out + "'");
      }
      auto results = random_search(c, pick_fold(fs, sw_fold), space, sw_trials, seed_or(0), mc, tc, sets,
                                   [&](const TrialResult& r) {
                                     json j = {{"trial", r.index},
                                               {"architecture", r.config.architecture},
                                               {"encoder_source", r.config.encoder_source},
                                               {"model", to_json(r.config.model)},
                                               {"train", to_json(r.config.train)},
                                               {"dev_macro_f1", r.dev_macro_f1},
                                               {"best_step", r.best_step}};
                                     if (out.is_open()) out << j.dump() << '\n' << std::flush;
                                     note("trial " + std::to_string(r.index) + ": dev macro F1 " +
                                          std::to_string(r.dev_macro_f1));
                                   });
      std::printf("%-5s  %-8s  %-10s  %-9s  %6s  %5s  %9s  %8s\n", "trial", "arch", "source", "act", "hidden",
                  "drop", "peak_lr", "dev F1");
      for (const auto& r : results)
        std::printf("%-5d  %-8s  %-10s  %-9s  %6d  %5.2f  %9.2e  %8.4f\n", r.index, r.config.architecture.c_str(),
                    r.config.encoder_source.c_str(), activation_name(r.config.model.classifier.activation).c_str(),
                    r.config.model.classifier.hidden, r.config.model.classifier.dropout, r.config.train.peak_lr,
                    r.dev_macro_f1);
    } else if (*ev) {
      const Corpus gold = load_corpus(ev_gold);
      const Corpus pred = load_corpus(ev_pred);
      std::map<std::string, const Excerpt*> by_id;
      for (const auto& e : pred) by_id.emplace(e.id, &e);
      std::vector<std::vector<SpanAnnotation>> predicted;
      for (const auto& e : gold) {
        auto it = by_id.find(e.id);
        if (it == by_id.end()) throw DataError("no prediction for excerpt '" + e.id + "'");
        if (it->second->token_count() != e.token_count())
          throw DataError("excerpt '" + e.id + "': prediction tokenisation differs from gold");
        predicted.push_back(it->second->spans);
      }
      const auto pairs = align_corpus(gold, predicted, ev_annotator);
      const EvalReport r = score_report(pairs);
      if (ev_json) std::cout << report_to_json(r).dump(2) << '\n';
      else std::cout << format_report(r);
      for (const auto& w : r.warnings) note("warning: " + w);
    } else if (*ag) {
      const EvalReport r = agreement(load_corpus(ag_in), ag_a, ag_b);
      if (ag_json) std::cout << report_to_json(r).dump(2) << '\n';
      else std::cout << format_report(r);
    } else if (*pr) {
      const Corpus c = load_corpus(pr_in);
      const SpanModel<float> model = load_checkpoint(pr_model);
      const auto vecs = maybe_vectors(pr_vectors, c, model.config());
      const double thr = pr_threshold.value_or(model.config().threshold);
      std::ostringstream out;
      if (pr_format == "html") out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"></head><body>\n";
      Corpus tagged;
      for (const auto& e : c) {
        auto spans = model.predict(e, vectors_for(ptr(vecs), e), thr);
        if (pr_format == "jsonl") {
          Excerpt copy = e;
          copy.spans = std::move(spans);
          tagged.push_back(std::move(copy));
        } else if (pr_format == "html") {
          out << "<section id=\"" << html_escape(e.id) << "\"><h3>" << html_escape(e.id) << "</h3>\n"
              << render_highlights(e, spans, RenderFormat::Html) << "\n</section>\n";
        } else {
          out << "# " << e.id << '\n' << render_highlights(e, spans, RenderFormat::Ansi) << "\n\n";
        }
      }
      if (pr_format == "jsonl") write_jsonl(out, tagged);
      if (pr_format == "html") out << "</body></html>\n";
      write_text(pr_out, out.str());
    } else if (*sy) {
      SyntheticConfig sc;
      sc.excerpts = sy_n;
      sc.seed = seed_or(1);
      const Corpus c = make_synthetic_corpus(sc);
      export_jsonl(sy_out, c);
      if (!sy_vectors.empty()) {
        std::vector<std::string> order;
        for (const auto& e : c) order.push_back(e.id);
        save_vectors(sy_vectors, make_lookup_vectors(c, sy_dim), sy_dim, order);
      }
      note("wrote " + std::to_string(c.size()) + " excerpts to " + sy_out);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const NoDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
