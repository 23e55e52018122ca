// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Thresholds are fixed here and never tuned to the result.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "cli_pipeline.hpp"
#include "covbias/covbias.hpp"
#include "covbias/synthetic.hpp"
#include "fmeasure_oracle.hpp"

using namespace covbias;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// State shared by the testbed-driven criteria.
struct Shared {
  synthetic::Testbed tb;
  std::vector<ScoreRecord> test_records;  // classified with the tuned offset
  double tuned_c = 0.0;
  DetectionReport detection;
};

void criterion_detection(Shared& s) {
  const auto t0 = Clock::now();
  s.tb = synthetic::make_testbed();  // 300-word lexicons, 20% overlap, 2000+2000 pairs, 10k mono, 500 tuning
  const TrainOptions opts{3, 2};
  const auto src_lm = NGramModel::train(synthetic::texts(s.tb.source_mono), opts);
  const auto tgt_lm = NGramModel::train(synthetic::texts(s.tb.target_mono), opts);
  const DetectorConfig<NGramModel> raw_cfg(src_lm, tgt_lm, 0.0);
  std::vector<LabeledScore> tuning;
  for (const auto& ex : s.tb.tuning) tuning.push_back({raw_score(raw_cfg, ex), *ex.origin});
  const auto tuned = tune_offset(tuning);
  s.tuned_c = tuned.offset_c;
  s.test_records = classify(DetectorConfig<NGramModel>(src_lm, tgt_lm, tuned.offset_c), s.tb.test, 1);
  s.detection = evaluate_detection(s.test_records, synthetic::gold_labels(s.tb.test));
  const double secs = seconds_since(t0);
  report(1, "synthetic detection fidelity", s.detection.macro_f1 >= 0.90 && secs < 60.0,
         fmt("macro-F1 %.4f (need >= 0.90), c = %.4f, %zu test pairs, %.2f s on one thread (need < 60 s)",
             s.detection.macro_f1, tuned.offset_c, s.tb.test.size(), secs));
}

void criterion_divergence(const Shared& s) {
  const auto t0 = Clock::now();
  const auto sel = select_extremes(s.test_records, SelectionSpec(50.0));
  const auto biased = divergence_report(s.tb.test, reports::to_partition(sel), Side::Source);
  const auto random = divergence_report(s.tb.test, random_split(s.tb.test.size(), 0.5, 2021), Side::Source);
  const double secs = seconds_since(t0);
  const double ratio = biased.rows[0].js_nats / random.rows[0].js_nats;
  const bool ok = ratio >= 10.0 && biased.rows[1].js_nats > biased.rows[2].js_nats && secs < 10.0;
  report(2, "divergence pattern", ok,
         fmt("JS all %.6f vs random %.6f, ratio %.1fx (need >= 10x); content %.6f > function %.6f; %.2f s (need < 10 s)",
             biased.rows[0].js_nats, random.rows[0].js_nats, ratio, biased.rows[1].js_nats, biased.rows[2].js_nats,
             secs));
}

void criterion_js_truths() {
  const VocabDistribution p({{"a", 3}, {"b", 1}}), q({{"a", 1}, {"b", 3}});
  const VocabDistribution only_a({{"a", 1}}), only_b({{"b", 1}});
  const double self = js(p, p), disjoint = js(only_a, only_b), pq = js(p, q), qp = js(q, p);
  // Symmetry on random distributions as well.
  std::mt19937_64 rng(3);
  bool symmetric = pq == qp;
  for (int i = 0; i < 200 && symmetric; ++i) {
    std::map<std::string, std::uint64_t> a, b;
    for (int w = 0; w < 12; ++w) {
      a["w" + std::to_string(w)] = rng() % 5;
      b["w" + std::to_string(w + 3)] = rng() % 5;
    }
    a["w0"] += 1;
    b["w3"] += 1;
    const VocabDistribution da(a), db(b);
    symmetric = js(da, db) == js(db, da);
  }
  const bool ok = self == 0.0 && std::abs(disjoint - std::log(2.0)) <= 1e-12 && symmetric &&
                  std::abs(pq - 0.130812) <= 1e-6 && std::abs(kl(p, q) - 0.5 * std::log(3.0)) <= 1e-12;
  report(3, "JS/KL unit truths", ok,
         fmt("js(p,p) = %g, disjoint %.15f (ln2 %.15f), symmetric %s, js(0.75/0.25, 0.25/0.75) = %.9f", self, disjoint,
             std::log(2.0), symmetric ? "exactly" : "NO", pq));
}

std::vector<Sentence> random_corpus(std::mt19937_64& rng, std::size_t lines, int vocab) {
  std::vector<Sentence> out;
  std::uniform_int_distribution<int> len(1, 9), word(0, vocab - 1);
  for (std::size_t i = 0; i < lines; ++i) {
    Sentence s;
    for (int k = len(rng); k > 0; --k) s.tokens.push_back("w" + std::to_string(word(rng)));
    out.push_back(std::move(s));
  }
  return out;
}

void criterion_lm_normalization() {
  std::mt19937_64 rng(44);
  double worst = 0.0;
  std::size_t contexts = 0;
  bool small_vocab = true;
  for (int order = 1; order <= 3; ++order) {
    const auto m = NGramModel::train(random_corpus(rng, 120, 16), TrainOptions{order, 1});
    small_vocab = small_vocab && m.vocabulary().size() <= 20;
    const auto words = m.predictable_ids();
    for (int level = 1; level <= order; ++level)
      for (const auto& ctx : m.contexts(level)) {
        double sum = 0.0;
        for (auto w : words) sum += std::exp(m.conditional_logprob(ctx, w));
        worst = std::max(worst, std::abs(sum - 1.0));
        ++contexts;
      }
  }

  const auto model = NGramModel::train(random_corpus(rng, 200, 18), TrainOptions{3, 1});
  const fs::path tmp = fs::temp_directory_path() / ("covbias-accept-" + std::to_string(::getpid()) + ".nglm");
  model.save(tmp);
  const auto back = NGramModel::load(tmp);
  fs::remove(tmp);
  std::size_t identical = 0;
  const auto probes = random_corpus(rng, 100, 20);
  for (const auto& s : probes) {
    const double a = model.score(s).total_logprob, b = back.score(s).total_logprob;
    identical += std::memcmp(&a, &b, sizeof a) == 0;
  }
  const bool ok = small_vocab && worst <= 1e-6 && identical == probes.size();
  report(4, "LM normalization and round-trip", ok,
         fmt("%zu contexts, max |sum - 1| = %.2e (need <= 1e-6); save/load bit-identical on %zu/100 sentences",
             contexts, worst, identical));
}

void criterion_cross_perplexity(const Shared& s) {
  const TrainOptions opts{3, 2};
  const auto src_lm = NGramModel::train(synthetic::texts(s.tb.source_mono), opts);
  const auto tgt_lm = NGramModel::train(synthetic::texts(s.tb.target_mono), opts);
  const auto src_held = synthetic::texts(s.tb.source_heldout), tgt_held = synthetic::texts(s.tb.target_heldout);
  const double ss = perplexity(src_lm, src_held), ts = perplexity(tgt_lm, src_held);
  const double tt = perplexity(tgt_lm, tgt_held), st = perplexity(src_lm, tgt_held);
  report(5, "cross-perplexity ordering", ss < ts && tt < st,
         fmt("source held-out: own %.3f < other %.3f; target held-out: own %.3f < other %.3f", ss, ts, tt, st));
}

void criterion_tune_optimality() {
  std::mt19937_64 rng(606);
  int ok_sets = 0, exact = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 199);
    std::vector<LabeledScore> data;
    std::normal_distribution<double> nd(0.0, 2.0);
    for (int i = 0; i < n; ++i) {
      const bool gold_s = (rng() & 1) != 0;
      // Half the sets draw from a coarse lattice to force ties.
      double v = trial % 2 ? static_cast<double>(static_cast<int>(rng() % 17) - 8) * 0.5 : nd(rng);
      if (gold_s) v += 0.8;
      data.push_back({v, gold_s ? OriginLabel::SourceOriginal : OriginLabel::TargetOriginal});
    }
    data[0].gold = OriginLabel::SourceOriginal;
    data[1].gold = OriginLabel::TargetOriginal;
    const auto r = tune_offset(data);
    std::vector<ScoreRecord> raw;
    std::vector<OriginLabel> gold;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < data.size(); ++i) {
      raw.push_back(ScoreRecord::from_score(i + 1, data[i].raw_score));
      gold.push_back(data[i].gold);
      lo = std::min(lo, data[i].raw_score);
      hi = std::max(hi, data[i].raw_score);
    }
    const double achieved = evaluate_detection(classify_scores(raw, r.offset_c), gold).macro_f1;
    exact += achieved == r.macro_f1;
    double grid = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double t = (lo - 1.0) + (hi - lo + 2.0) * i / 9999.0;
      grid = std::max(grid, evaluate_detection(classify_scores(raw, -t), gold).macro_f1);
    }
    worst_gap = std::max(worst_gap, grid - r.macro_f1);
    ok_sets += r.macro_f1 >= grid;
  }
  report(6, "tune_offset optimality", ok_sets == 50 && exact == 50,
         fmt("%d/50 sets >= best of 10^4-point grid (max shortfall %.3g); achieved F1 equals reported in %d/50", ok_sets,
             worst_gap, exact));
}

void criterion_fmeasure_oracle() {
  static const char* words[] = {"a", "b", "c", "d", "e"};
  static const char* tagset[] = {"NOUN", "VERB", "ADJ", "DET"};
  const BucketMap buckets = {{"adj", {"ADJ"}}, {"noun", {"NOUN"}}, {"verb", {"VERB"}}};
  std::mt19937_64 rng(777);
  int matching = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Sentence> hyp, ref;
    std::vector<PosAnnotation> pos;
    std::vector<std::vector<std::string>> h_raw, r_raw, p_raw;
    const int lines = 1 + static_cast<int>(rng() % 3);
    for (int l = 0; l < lines; ++l) {
      Sentence h, r;
      PosAnnotation p;
      for (int k = static_cast<int>(rng() % 7); k > 0; --k) h.tokens.emplace_back(words[rng() % 5]);
      for (int k = 1 + static_cast<int>(rng() % 6); k > 0; --k) {
        r.tokens.emplace_back(words[rng() % 5]);
        p.tags.emplace_back(tagset[rng() % 4]);
      }
      h_raw.push_back(h.tokens);
      r_raw.push_back(r.tokens);
      p_raw.push_back(p.tags);
      hyp.push_back(std::move(h));
      ref.push_back(std::move(r));
      pos.push_back(std::move(p));
    }
    const auto got = word_fmeasure(hyp, ref, pos, buckets);
    const auto want = oracle::fmeasure_counts(h_raw, r_raw, p_raw, buckets);
    bool same = got.per_bucket.size() == want.size();
    for (const auto& [name, w] : want)
      same = same && got.per_bucket.at(name) == finalize_bucket(w.matched, w.sys, w.ref);
    matching += same;
  }
  report(7, "F-measure oracle equivalence", matching == 100,
         fmt("%d/100 random instances match the multiset oracle on all six fields", matching));
}

void criterion_abstraction(const Shared& s) {
  const TrainOptions opts{3, 2};
  const AbstractionRule rule{WordClassMap()};
  const auto native = synthetic::texts(s.tb.source_mono), foreign = synthetic::texts(s.tb.source_translationese);
  const auto native_abs = abstract_sentences(native, synthetic::tags(s.tb.source_mono), rule);
  const auto foreign_abs = abstract_sentences(foreign, synthetic::tags(s.tb.source_translationese), rule);
  const auto eval = synthetic::texts(s.tb.source_heldout);
  const auto eval_pos = synthetic::tags(s.tb.source_heldout);
  const auto matched = fluency_report<NGramModel>(eval, eval_pos, NGramModel::train(native_abs, opts),
                                                  NGramModel::train(native, opts), rule);
  const auto mismatched = fluency_report<NGramModel>(eval, eval_pos, NGramModel::train(foreign_abs, opts),
                                                     NGramModel::train(foreign, opts), rule, matched);
  const double before = std::abs(*mismatched.plain.relative_diff);
  const double after = std::abs(*mismatched.abstracted.relative_diff);
  report(8, "abstraction effect", before > 0.20 && after < 0.05,
         fmt("relative PPL gap before abstraction %.1f%% (need > 20%%), after %.2f%% (need < 5%%); "
             "ppl %.2f vs %.2f plain, %.3f vs %.3f abstracted",
             100 * before, 100 * after, matched.plain.ppl, mismatched.plain.ppl, matched.abstracted.ppl,
             mismatched.abstracted.ppl));
}

std::string source_bytes(std::span<const ParallelExample> c) {
  std::ostringstream os;
  for (const auto& ex : c) write_sentence(os, ex.source);
  return os.str();
}

void criterion_data_prep(const Shared& s) {
  std::vector<std::string> problems;
  // bias_tag / detag round trip.
  const auto labels = labels_of(s.test_records);
  const auto tagged = bias_tag(s.tb.test, labels, TagPolicy::origin());
  const bool roundtrip = source_bytes(detag(tagged, TagPolicy::origin())) == source_bytes(s.tb.test);
  if (!roundtrip) problems.push_back("detag differs");

  // Fine-tuning split sizes.
  const auto sel = select_extremes(s.test_records, SelectionSpec(50.0));
  const auto split = finetune_split(s.tb.test.size(), sel);
  const bool sizes = split.finetune_lines.size() == sel.most_source.size() &&
                     split.finetune_lines.size() == s.tb.test.size() / 2 && split.pretrain_size == s.tb.test.size();
  if (!sizes) problems.push_back("finetune size");

  // Merge manifest partitions the output.
  const auto merged = merge_augment(s.tb.test, s.tb.tuning, TagPolicy::synthetic(), 99);
  std::vector<std::size_t> auth, syn;
  bool rows_ok = merged.manifest.size() == merged.merged.size();
  for (std::size_t i = 0; i < merged.manifest.size() && rows_ok; ++i) {
    const auto& m = merged.manifest[i];
    rows_ok = m.output_line_no == i + 1 &&
              (merged.merged[i].source.tokens.front() == "<BT>") == (m.provenance == Provenance::Synthetic);
    (m.provenance == Provenance::Synthetic ? syn : auth).push_back(m.original_line_no);
  }
  std::sort(auth.begin(), auth.end());
  std::sort(syn.begin(), syn.end());
  auto is_iota = [](const std::vector<std::size_t>& v, std::size_t n) {
    if (v.size() != n) return false;
    for (std::size_t i = 0; i < n; ++i)
      if (v[i] != i + 1) return false;
    return true;
  };
  const bool manifest = rows_ok && is_iota(auth, s.tb.test.size()) && is_iota(syn, s.tb.tuning.size());
  if (!manifest) problems.push_back("manifest");

  // CLI pipeline: reruns and thread counts give byte-identical outputs, and
  // the detection report equals the in-process computation.
  const fs::path root = fs::temp_directory_path() / ("covbias-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  synthetic::write_testbed(s.tb, root / "data");
  std::size_t files = 0;
  bool deterministic = true, reproduces = false;
  std::string step;
  for (const auto& [name, threads] : std::vector<std::pair<std::string, unsigned>>{{"run1", 1}, {"run2", 1}, {"run4", 4}}) {
    const auto r = pipeline::run_all(root / "data", root / name, threads, &step);
    if (r.code != 0) {
      problems.push_back("pipeline step " + step + " exited " + std::to_string(r.code) + ": " + r.err);
      deterministic = false;
      break;
    }
  }
  if (deterministic) {
    const auto a = pipeline::snapshot(root / "run1");
    files = a.size();
    deterministic = a == pipeline::snapshot(root / "run2") && a == pipeline::snapshot(root / "run4");
    if (!deterministic) problems.push_back("pipeline outputs differ");
    std::ostringstream expect;
    reports::write_detection(expect, s.detection);
    reproduces = a.count("test.eval.tsv") && a.at("test.eval.tsv") == expect.str();
    if (!reproduces) problems.push_back("CLI detection report differs from in-process result");
  }
  fs::remove_all(root);

  std::string detail = fmt("detag byte-exact %s; finetune %zu = select(R=50) %zu; manifest partition %s; "
                           "%zu pipeline files identical over 2 reruns and --threads 1/4 %s; CLI report matches %s",
                           roundtrip ? "yes" : "no", split.finetune_lines.size(), sel.most_source.size(),
                           manifest ? "exact" : "BROKEN", files, deterministic ? "yes" : "no", reproduces ? "yes" : "no");
  for (const auto& p : problems) detail += "; " + p;
  report(9, "data-prep integrity", problems.empty(), detail);
}

}  // namespace

int main() {
  Shared shared;
  criterion_detection(shared);
  criterion_divergence(shared);
  criterion_js_truths();
  criterion_lm_normalization();
  criterion_cross_perplexity(shared);
  criterion_tune_optimality();
  criterion_fmeasure_oracle();
  criterion_abstraction(shared);
  criterion_data_prep(shared);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
