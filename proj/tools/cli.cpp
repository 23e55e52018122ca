#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "covbias/covbias.hpp"

namespace covbias::cli {
namespace {

constexpr std::size_t kBatch = 4096;

struct Globals {
  unsigned threads = 1;
};

// Report destination: a file written atomically, or `out` for "-".
class ReportSink {
 public:
  ReportSink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (path != "-") file_.emplace(path);
  }
  std::ostream& stream() { return file_ ? file_->stream() : fallback_; }
  void commit() {
    if (file_) file_->commit();
  }

 private:
  std::ostream& fallback_;
  std::optional<AtomicFile> file_;
};

WordClassMap load_classes(const std::string& path) {
  return path.empty() ? WordClassMap{} : WordClassMap::from_file(path);
}

Side parse_side(const std::string& s) { return s == "target" ? Side::Target : Side::Source; }

ParallelPaths paths(const std::string& src, const std::string& tgt, const std::string& src_pos = {},
                    const std::string& tgt_pos = {}) {
  ParallelPaths p{src, tgt, std::nullopt, std::nullopt};
  if (!src_pos.empty()) p.source_pos = src_pos;
  if (!tgt_pos.empty()) p.target_pos = tgt_pos;
  return p;
}

void add_config(CLI::App* sub) {
  sub->add_option("--config", "key=value file with defaults for this subcommand; flags win")
      ->check(CLI::ExistingFile);
}

// Splits "--name=value" into its option name.
std::string option_name(const std::string& tok) { return tok.substr(0, tok.find('=')); }

// CLI11 only reads config files at the top level, so a subcommand's
// --config is expanded here: every key the user did not pass explicitly is
// spliced into argv right after the subcommand name, then parsing runs as
// usual (validators and required checks included).
std::vector<std::string> expand_args(CLI::App& app, std::vector<std::string> args) {
  std::size_t pos = 0;
  while (pos < args.size() && args[pos].starts_with("-")) {
    if (args[pos] == "--threads") ++pos;  // its value
    ++pos;
  }
  if (pos == args.size()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[pos]);
  if (!sub) throw CLI::ValidationError("unknown subcommand '" + args[pos] + "'");

  std::string config;
  std::vector<const CLI::Option*> given;
  for (std::size_t i = pos + 1; i < args.size(); ++i) {
    if (!args[i].starts_with("-")) continue;
    const std::string name = option_name(args[i]);
    if (name == "--config") {
      if (args[i].size() > name.size()) config = args[i].substr(name.size() + 1);
      else if (i + 1 < args.size()) config = args[i + 1];
    }
    if (const auto* opt = sub->get_option_no_throw(name)) given.push_back(opt);
  }
  if (config.empty() || !std::filesystem::is_regular_file(config)) return args;  // CLI11 reports a bad path

  std::vector<std::string> extra;
  for (const auto& item : CLI::ConfigINI().from_file(config)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub->get_name()))
      throw CLI::ValidationError(config + ": section [" + CLI::detail::join(item.parents, ".") + "] does not apply");
    const CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (!opt || item.name == "config") throw CLI::ValidationError(config + ": unknown key '" + item.name + "'");
    if (std::find(given.begin(), given.end(), opt) != given.end()) continue;
    if (opt->get_type_size() == 0) {
      extra.push_back("--" + item.name + "=" + (item.inputs.empty() ? "true" : item.inputs.front()));
    } else {
      extra.push_back("--" + item.name);
      extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos) + 1, extra.begin(), extra.end());
  return args;
}

// Each subcommand registers its options and returns the action to run.
using Action = std::function<void()>;

Action add_train_lm(CLI::App& app) {
  auto* sub = app.add_subcommand("train-lm", "Train a Kneser-Ney n-gram model on a monolingual corpus");
  add_config(sub);
  struct Opts {
    std::string input, output;
    int order = 4;
    std::uint64_t min_count = 2;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-i,--input", o->input, "monolingual corpus")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output, "model file")->required();
  sub->add_option("--order", o->order, "n-gram order")->capture_default_str()->check(CLI::Range(1, 6));
  sub->add_option("--min-count", o->min_count, "minimum type frequency; rarer words become <unk>")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  return [sub, o] {
    if (!sub->parsed()) return;
    const auto model = NGramModel::train(read_mono(o->input), TrainOptions{o->order, o->min_count});
    model.save(o->output);
  };
}

Action add_perplexity(CLI::App& app, std::ostream& out, const Globals& g) {
  auto* sub = app.add_subcommand("perplexity", "Perplexity of a model on a corpus");
  add_config(sub);
  struct Opts {
    std::string model, input, output = "-";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-m,--model", o->model)->required()->check(CLI::ExistingFile);
  sub->add_option("-i,--input", o->input)->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output, "report path or - for stdout")->capture_default_str();
  return [sub, o, &out, &g] {
    if (!sub->parsed()) return;
    const auto model = NGramModel::load(o->model);
    const auto corpus = read_mono(o->input);
    if (corpus.empty()) throw Error(Errc::EmptyCorpus, o->input);
    const auto scores = parallel_map(std::span<const Sentence>(corpus), g.threads,
                                     [&](const Sentence& s) { return model.score(s); });
    double total = 0.0;
    std::size_t tokens = 0;
    for (const auto& s : scores) {
      total += s.total_logprob;
      tokens += s.token_count;
    }
    ReportSink sink(o->output, out);
    tsv::Writer w(sink.stream());
    w.row("sentences", "tokens", "perplexity");
    w.row(corpus.size(), tokens, std::exp(-total / static_cast<double>(tokens)));
    sink.commit();
  };
}

Action add_score_pairs(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("score-pairs", "Score every sentence pair with the two language models");
  add_config(sub);
  struct Opts {
    std::string src, tgt, source_lm, target_lm, output, gold, tuning_output;
    double offset = 0.0;
    bool length_normalize = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--src", o->src)->required()->check(CLI::ExistingFile);
  sub->add_option("--tgt", o->tgt)->required()->check(CLI::ExistingFile);
  sub->add_option("--source-lm", o->source_lm)->required()->check(CLI::ExistingFile);
  sub->add_option("--target-lm", o->target_lm)->required()->check(CLI::ExistingFile);
  sub->add_option("-c,--offset", o->offset, "additive offset in nats")->capture_default_str();
  sub->add_flag("--length-normalize", o->length_normalize, "divide each log-probability by its token count");
  sub->add_option("-o,--output", o->output, "score TSV")->required();
  sub->add_option("--gold", o->gold, "gold S/T label per line")->check(CLI::ExistingFile);
  sub->add_option("--tuning-output", o->tuning_output, "score+gold TSV for tune-offset")->needs("--gold");
  return [sub, o, &g] {
    if (!sub->parsed()) return;
    const auto src_lm = NGramModel::load(o->source_lm);
    const auto tgt_lm = NGramModel::load(o->target_lm);
    // Raw scores are kept so the tuning output never carries the offset.
    const DetectorConfig<NGramModel> cfg(src_lm, tgt_lm, 0.0, o->length_normalize);
    ParallelReader reader(paths(o->src, o->tgt));
    std::optional<LineReader> gold;
    if (!o->gold.empty()) gold.emplace(o->gold);
    std::optional<AtomicFile> tuning;
    if (!o->tuning_output.empty()) tuning.emplace(o->tuning_output);
    std::optional<tsv::Writer> tuning_w;
    if (tuning) {
      tuning_w.emplace(tuning->stream());
      tuning_w->row("score", "gold");
    }
    AtomicFile out(o->output);
    tsv::Writer w(out.stream());
    w.row("line_no", "score", "label");
    std::vector<ParallelExample> batch;
    std::size_t first_line = 1;
    std::string gold_line;
    auto flush = [&] {
      for (const auto& r : classify(cfg, std::span<const ParallelExample>(batch), g.threads, first_line)) {
        const auto rec = ScoreRecord::from_score(r.line_no, r.score + o->offset);
        w.row(rec.line_no, rec.score, label_code(rec.label));
        if (gold) {
          if (!gold->next(gold_line)) throw Error(Errc::LineCountMismatch, "gold labels end early", r.line_no);
          tuning_w->row(r.score, label_code(parse_label(gold_line, r.line_no)));
        }
      }
      first_line += batch.size();
      batch.clear();
    };
    ParallelExample ex;
    while (reader.next(ex)) {
      batch.push_back(ex);
      if (batch.size() == kBatch) flush();
    }
    flush();
    if (gold && gold->next(gold_line)) throw Error(Errc::LineCountMismatch, "more gold labels than pairs");
    out.commit();
    if (tuning) tuning->commit();
  };
}

Action add_tune_offset(CLI::App& app, std::ostream& out) {
  auto* sub = app.add_subcommand("tune-offset", "Choose the offset c maximizing macro-F1 on labeled scores");
  add_config(sub);
  struct Opts {
    std::string input, output = "-";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-i,--input", o->input, "TSV with columns score, gold")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output)->capture_default_str();
  return [sub, o, &out] {
    if (!sub->parsed()) return;
    const auto data = reports::read_tuning(o->input);
    const auto result = tune_offset(data);
    ReportSink sink(o->output, out);
    reports::write_tune_result(sink.stream(), result);
    sink.commit();
  };
}

Action add_classify(CLI::App& app, std::ostream& out) {
  auto* sub = app.add_subcommand("classify", "Apply an offset to raw scores and label each pair");
  add_config(sub);
  struct Opts {
    std::string scores, offset_from, output, gold, eval_output = "-";
    double offset = 0.0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-s,--scores", o->scores, "score TSV from score-pairs")->required()->check(CLI::ExistingFile);
  auto* off = sub->add_option("-c,--offset", o->offset, "offset in nats");
  sub->add_option("--offset-from", o->offset_from, "tune-offset result TSV")->excludes(off)->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output)->required();
  sub->add_option("--gold", o->gold, "gold S/T label per line")->check(CLI::ExistingFile);
  sub->add_option("--eval-output", o->eval_output, "evaluation TSV when --gold is given")->capture_default_str();
  return [sub, o, &out] {
    if (!sub->parsed()) return;
    const double c = o->offset_from.empty() ? o->offset : reports::read_tune_result(o->offset_from).offset_c;
    const auto records = classify_scores(reports::read_scores(o->scores), c);
    AtomicFile file(o->output);
    reports::write_scores(file.stream(), records);
    std::optional<ReportSink> eval;
    if (!o->gold.empty()) {
      const auto gold = reports::read_labels(o->gold);
      eval.emplace(o->eval_output, out);
      reports::write_detection(eval->stream(), evaluate_detection(records, gold));
    }
    file.commit();
    if (eval) eval->commit();
  };
}

Action add_select(CLI::App& app) {
  auto* sub = app.add_subcommand("select", "Select the R% most source- and target-original pairs");
  add_config(sub);
  struct Opts {
    std::string scores, output;
    double ratio = 50.0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-s,--scores", o->scores)->required()->check(CLI::ExistingFile);
  sub->add_option("-r,--ratio", o->ratio, "percentage R in (0, 50]")->capture_default_str();
  sub->add_option("-o,--output", o->output, "partition TSV (line_no, group)")->required();
  return [sub, o] {
    if (!sub->parsed()) return;
    const SelectionSpec spec(o->ratio);
    const auto sel = select_extremes(reports::read_scores(o->scores), spec);
    AtomicFile file(o->output);
    reports::write_partition(file.stream(), reports::to_partition(sel));
    file.commit();
  };
}

std::size_t count_lines(const std::string& path) {
  LineReader in(path);
  std::string line;
  std::size_t n = 0;
  while (in.next(line)) ++n;
  return n;
}

Action add_random_split(CLI::App& app) {
  auto* sub = app.add_subcommand("random-split", "Seeded random two-way partition of line numbers");
  add_config(sub);
  struct Opts {
    std::string count_from, output;
    std::size_t lines = 0;
    double fraction = 0.5;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* n = sub->add_option("-n,--lines", o->lines, "number of lines");
  sub->add_option("--count-from", o->count_from, "take the line count of this file")
      ->excludes(n)
      ->check(CLI::ExistingFile);
  sub->add_option("-f,--fraction", o->fraction)->capture_default_str();
  sub->add_option("--seed", o->seed)->required();
  sub->add_option("-o,--output", o->output)->required();
  return [sub, o] {
    if (!sub->parsed()) return;
    if (o->count_from.empty() && sub->count("--lines") == 0)
      throw Error(Errc::InvalidArgument, "one of --lines or --count-from is required");
    const std::size_t lines = o->count_from.empty() ? o->lines : count_lines(o->count_from);
    const auto p = random_split(lines, o->fraction, o->seed);
    AtomicFile file(o->output);
    reports::write_partition(file.stream(), p);
    file.commit();
  };
}

Action add_jsdiv(CLI::App& app, std::ostream& out) {
  auto* sub = app.add_subcommand("jsdiv", "JS divergence between the vocabularies of two partitions");
  add_config(sub);
  struct Opts {
    std::string src, tgt, src_pos, tgt_pos, partition, classes, side = "source", output = "-";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--src", o->src)->required()->check(CLI::ExistingFile);
  sub->add_option("--tgt", o->tgt)->required()->check(CLI::ExistingFile);
  sub->add_option("--src-pos", o->src_pos)->check(CLI::ExistingFile);
  sub->add_option("--tgt-pos", o->tgt_pos)->check(CLI::ExistingFile);
  sub->add_option("-p,--partition", o->partition, "partition TSV from select or random-split")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--side", o->side)->capture_default_str()->check(CLI::IsMember({"source", "target"}));
  sub->add_option("--classes", o->classes, "word-class file with a [content] section")->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output)->capture_default_str();
  return [sub, o, &out] {
    if (!sub->parsed()) return;
    const Side side = parse_side(o->side);
    const bool with_classes = !(side == Side::Source ? o->src_pos : o->tgt_pos).empty();
    const auto partition = reports::read_partition(o->partition);
    const std::size_t n = count_lines(o->src);
    DivergenceAccumulator acc(partition, n, side, load_classes(o->classes), with_classes);
    ParallelReader reader(paths(o->src, o->tgt, o->src_pos, o->tgt_pos));
    ParallelExample ex;
    while (reader.next(ex)) acc.add(ex, reader.line_no());
    ReportSink sink(o->output, out);
    reports::write_divergence(sink.stream(), acc.report());
    sink.commit();
  };
}

BucketMap default_buckets() { return {{"adj", {"ADJ"}}, {"noun", {"NOUN"}}, {"verb", {"VERB"}}}; }

Action add_fmeasure(CLI::App& app, std::ostream& out, const Globals& g) {
  auto* sub = app.add_subcommand("fmeasure", "Word F-measure per POS bucket against references");
  add_config(sub);
  struct Opts {
    std::string hyp, ref, ref_pos, buckets, output = "-", compare_hyp, delta_output;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--hyp", o->hyp)->required()->check(CLI::ExistingFile);
  sub->add_option("--ref", o->ref)->required()->check(CLI::ExistingFile);
  sub->add_option("--ref-pos", o->ref_pos)->required()->check(CLI::ExistingFile);
  sub->add_option("--buckets", o->buckets, "bucket file, one [section] per bucket")->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output)->capture_default_str();
  sub->add_option("--compare-hyp", o->compare_hyp, "second system output to compare against --hyp")
      ->check(CLI::ExistingFile);
  sub->add_option("--delta-output", o->delta_output)->needs("--compare-hyp");
  return [sub, o, &out, &g] {
    if (!sub->parsed()) return;
    const BucketMap buckets = o->buckets.empty() ? default_buckets() : load_tag_sections(o->buckets);
    const auto ref = read_mono(o->ref);
    const auto ref_pos = read_pos(o->ref_pos);
    const auto report = word_fmeasure(read_mono(o->hyp), ref, ref_pos, buckets, g.threads);
    ReportSink sink(o->output, out);
    reports::write_adequacy(sink.stream(), report);
    if (!o->compare_hyp.empty()) {
      const auto other = word_fmeasure(read_mono(o->compare_hyp), ref, ref_pos, buckets, g.threads);
      const auto deltas = compare_reports(report, other);
      if (o->delta_output.empty()) {
        reports::write_deltas(sink.stream(), deltas);
      } else {
        AtomicFile file(o->delta_output);
        reports::write_deltas(file.stream(), deltas);
        file.commit();
      }
    }
    sink.commit();
  };
}

struct RuleOpts {
  std::string classes, prefix, suffix;
};

void add_rule_options(CLI::App* sub, RuleOpts& r) {
  sub->add_option("--classes", r.classes, "word-class file with a [content] section")->check(CLI::ExistingFile);
  sub->add_option("--tag-prefix", r.prefix, "text placed before an abstracted tag");
  sub->add_option("--tag-suffix", r.suffix, "text placed after an abstracted tag");
}

AbstractionRule make_rule(const RuleOpts& r) { return AbstractionRule(load_classes(r.classes), r.prefix, r.suffix); }

Action add_abstract(CLI::App& app) {
  auto* sub = app.add_subcommand("abstract", "Replace content words with their POS tags");
  add_config(sub);
  struct Opts {
    std::string input, pos, output;
    RuleOpts rule;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-i,--input", o->input)->required()->check(CLI::ExistingFile);
  sub->add_option("--pos", o->pos)->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output)->required();
  add_rule_options(sub, o->rule);
  return [sub, o] {
    if (!sub->parsed()) return;
    abstract_corpus(o->input, o->pos, make_rule(o->rule), o->output);
  };
}

Action add_fluency(CLI::App& app, std::ostream& out) {
  auto* sub = app.add_subcommand("fluency", "Perplexity with and without content-word abstraction");
  add_config(sub);
  struct Opts {
    std::string input, pos, plain_lm, abstracted_lm, baseline, output = "-";
    RuleOpts rule;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("-i,--input", o->input, "system outputs")->required()->check(CLI::ExistingFile);
  sub->add_option("--pos", o->pos)->required()->check(CLI::ExistingFile);
  sub->add_option("--plain-lm", o->plain_lm)->required()->check(CLI::ExistingFile);
  sub->add_option("--abstracted-lm", o->abstracted_lm)->required()->check(CLI::ExistingFile);
  sub->add_option("--baseline", o->baseline, "fluency TSV to report relative changes against")
      ->check(CLI::ExistingFile);
  sub->add_option("-o,--output", o->output)->capture_default_str();
  add_rule_options(sub, o->rule);
  return [sub, o, &out] {
    if (!sub->parsed()) return;
    const auto plain = NGramModel::load(o->plain_lm);
    const auto abstracted = NGramModel::load(o->abstracted_lm);
    std::optional<FluencyReport> baseline;
    if (!o->baseline.empty()) baseline = reports::read_fluency(o->baseline);
    const auto report =
        fluency_report(read_mono(o->input), read_pos(o->pos), abstracted, plain, make_rule(o->rule), baseline);
    ReportSink sink(o->output, out);
    reports::write_fluency(sink.stream(), report);
    sink.commit();
  };
}

Action add_tag(CLI::App& app) {
  auto* sub = app.add_subcommand("tag", "Prepend a tag to the source side of target-original pairs");
  add_config(sub);
  struct Opts {
    std::string src, tgt, scores, tag = "<TORIG>", out_src, out_tgt;
    bool strip = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--src", o->src)->required()->check(CLI::ExistingFile);
  sub->add_option("--tgt", o->tgt)->required()->check(CLI::ExistingFile);
  auto* scores = sub->add_option("-s,--scores", o->scores, "classified score TSV")->check(CLI::ExistingFile);
  sub->add_option("--tag", o->tag)->capture_default_str();
  sub->add_flag("--strip", o->strip, "remove one leading tag instead of adding it")->excludes(scores);
  sub->add_option("--out-src", o->out_src)->required();
  sub->add_option("--out-tgt", o->out_tgt)->required();
  return [sub, o] {
    if (!sub->parsed()) return;
    const TagPolicy policy(o->tag);
    const auto examples = read_parallel(paths(o->src, o->tgt));
    std::vector<ParallelExample> result;
    if (o->strip) {
      result = detag(examples, policy);
    } else {
      if (o->scores.empty()) throw Error(Errc::InvalidArgument, "--scores is required unless --strip is given");
      result = bias_tag(examples, labels_of(reports::read_scores(o->scores)), policy);
    }
    write_parallel(result, o->out_src, o->out_tgt);
  };
}

Action add_split_finetune(CLI::App& app, std::ostream& out) {
  auto* sub = app.add_subcommand("split-finetune", "Write the pre-training corpus and the source-original subset");
  add_config(sub);
  struct Opts {
    std::string src, tgt, scores, selection, prefix;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--src", o->src)->required()->check(CLI::ExistingFile);
  sub->add_option("--tgt", o->tgt)->required()->check(CLI::ExistingFile);
  auto* s = sub->add_option("-s,--scores", o->scores, "classified score TSV")->check(CLI::ExistingFile);
  sub->add_option("--selection", o->selection, "partition TSV from select")->excludes(s)->check(CLI::ExistingFile);
  sub->add_option("--out-prefix", o->prefix, "writes PREFIX.{pretrain,finetune}.{src,tgt} and PREFIX.manifest.tsv")
      ->required();
  return [sub, o, &out] {
    if (!sub->parsed()) return;
    if (o->scores.empty() == o->selection.empty())
      throw Error(Errc::InvalidArgument, "exactly one of --scores or --selection is required");
    const auto examples = read_parallel(paths(o->src, o->tgt));
    const FinetuneSplit split =
        o->scores.empty() ? finetune_split(examples.size(), reports::read_partition(o->selection).first)
                          : finetune_split(examples.size(), std::span<const ScoreRecord>(reports::read_scores(o->scores)));
    ParallelWriter pre(o->prefix + ".pretrain.src", o->prefix + ".pretrain.tgt");
    for (const auto& ex : examples) pre.write(ex);
    ParallelWriter fine(o->prefix + ".finetune.src", o->prefix + ".finetune.tgt");
    for (std::size_t l : split.finetune_lines) fine.write(examples[l - 1]);
    AtomicFile manifest(o->prefix + ".manifest.tsv");
    reports::write_manifest(manifest.stream(), split.manifest);
    pre.commit();
    fine.commit();
    manifest.commit();
    tsv::Writer w(out);
    w.row("pretrain", "finetune");
    w.row(split.pretrain_size, split.finetune_lines.size());
  };
}

Action add_merge_augment(CLI::App& app) {
  auto* sub = app.add_subcommand("merge-augment", "Merge authentic and synthetic parallel data");
  add_config(sub);
  struct Opts {
    std::string auth_src, auth_tgt, syn_src, syn_tgt, tag, out_src, out_tgt, manifest;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--auth-src", o->auth_src)->required()->check(CLI::ExistingFile);
  sub->add_option("--auth-tgt", o->auth_tgt)->required()->check(CLI::ExistingFile);
  sub->add_option("--syn-src", o->syn_src)->required()->check(CLI::ExistingFile);
  sub->add_option("--syn-tgt", o->syn_tgt)->required()->check(CLI::ExistingFile);
  sub->add_option("--tag", o->tag, "tag synthetic pairs with this token (e.g. <BT>)");
  sub->add_option("--seed", o->seed, "shuffle with this seed; concatenate when absent");
  sub->add_option("--out-src", o->out_src)->required();
  sub->add_option("--out-tgt", o->out_tgt)->required();
  sub->add_option("--manifest", o->manifest)->required();
  return [sub, o] {
    if (!sub->parsed()) return;
    std::optional<TagPolicy> policy;
    if (!o->tag.empty()) policy.emplace(o->tag);
    std::optional<std::uint64_t> seed;
    if (sub->count("--seed")) seed = o->seed;
    const auto result = merge_augment(read_parallel(paths(o->auth_src, o->auth_tgt)),
                                      read_parallel(paths(o->syn_src, o->syn_tgt)), policy, seed);
    ParallelWriter writer(o->out_src, o->out_tgt);
    for (const auto& ex : result.merged) writer.write(ex);
    AtomicFile manifest(o->manifest);
    reports::write_manifest(manifest.stream(), result.manifest);
    writer.commit();
    manifest.commit();
  };
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Original-language detection and language coverage bias analysis for parallel corpora", "covbias"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "worker threads for data-parallel stages")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.set_version_flag("--version", std::string("covbias ") + kToolVersion + " (model format " +
                                        std::to_string(NGramModel::kFormatVersion) + ")");

  std::vector<Action> actions{
      add_train_lm(app),         add_perplexity(app, out, g), add_score_pairs(app, g),    add_tune_offset(app, out),
      add_classify(app, out),    add_select(app),             add_random_split(app),      add_jsdiv(app, out),
      add_fmeasure(app, out, g), add_abstract(app),           add_fluency(app, out),      add_tag(app),
      add_split_finetune(app, out), add_merge_augment(app),
  };

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_args(app, std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    for (auto& act : actions) act();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_usage() ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace covbias::cli
