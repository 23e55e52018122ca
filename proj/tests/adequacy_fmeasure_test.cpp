#include <gtest/gtest.h>

#include <random>

#include "covbias/adequacy_fmeasure.hpp"
#include "fmeasure_oracle.hpp"
#include "test_util.hpp"

using namespace covbias;
using testutil::error_code;
using testutil::sentences;

namespace {

std::vector<PosAnnotation> tags(std::initializer_list<const char*> lines) {
  std::vector<PosAnnotation> out;
  for (const char* l : lines) out.push_back(testutil::pos(l));
  return out;
}

std::vector<std::vector<std::string>> raw(const std::vector<Sentence>& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : c) out.push_back(s.tokens);
  return out;
}

std::vector<std::vector<std::string>> raw(const std::vector<PosAnnotation>& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : c) out.push_back(s.tags);
  return out;
}

struct Instance {
  std::vector<Sentence> hyp, ref;
  std::vector<PosAnnotation> pos;
};

Instance random_instance(std::mt19937_64& rng) {
  static const char* words[] = {"a", "b", "c", "d", "e"};
  static const char* tagset[] = {"NOUN", "VERB", "ADJ", "DET"};
  std::uniform_int_distribution<int> lines(1, 4), len(0, 6), w(0, 4), t(0, 3);
  Instance in;
  for (int l = lines(rng); l > 0; --l) {
    Sentence h, r;
    PosAnnotation p;
    for (int k = len(rng); k > 0; --k) h.tokens.emplace_back(words[w(rng)]);
    for (int k = std::max(1, len(rng)); k > 0; --k) {
      r.tokens.emplace_back(words[w(rng)]);
      p.tags.emplace_back(tagset[t(rng)]);
    }
    in.hyp.push_back(h);
    in.ref.push_back(r);
    in.pos.push_back(p);
  }
  return in;
}

const BucketMap kBuckets = {{"adj", {"ADJ"}}, {"noun", {"NOUN"}}, {"verb", {"VERB"}}};

}  // namespace

TEST(AdequacyFmeasure, HandCountedClipping) {
  const auto r = word_fmeasure(sentences({"a b b"}), sentences({"a a b"}), tags({"X X X"}), {{"all", {"X"}}});
  const auto& b = r.per_bucket.at("all");
  EXPECT_EQ(b.matched, 2u);
  EXPECT_EQ(b.sys_count, 3u);
  EXPECT_EQ(b.ref_count, 3u);
  EXPECT_DOUBLE_EQ(b.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.f1, 2.0 / 3.0);
}

TEST(AdequacyFmeasure, IdenticalAndDisjoint) {
  const auto ref = sentences({"the cat sat", "a dog ran"});
  const auto pos = tags({"DET NOUN VERB", "DET NOUN VERB"});
  const auto same = word_fmeasure(ref, ref, pos, kBuckets);
  EXPECT_DOUBLE_EQ(same.per_bucket.at("noun").f1, 1.0);
  EXPECT_DOUBLE_EQ(same.per_bucket.at("verb").f1, 1.0);
  // Empty bucket: no counts, F = 0.
  EXPECT_EQ(same.per_bucket.at("adj").ref_count, 0u);
  EXPECT_DOUBLE_EQ(same.per_bucket.at("adj").f1, 0.0);

  const auto none = word_fmeasure(sentences({"x y z", "q"}), ref, pos, kBuckets);
  for (const auto& [name, b] : none.per_bucket) EXPECT_DOUBLE_EQ(b.f1, 0.0) << name;
}

TEST(AdequacyFmeasure, MembershipByMajorityTag) {
  // "run" is VERB twice and NOUN once; "fly" ties and goes to ADJ (smallest tag).
  const auto ref = sentences({"run run fly", "run fly"});
  const auto pos = tags({"VERB VERB ADJ", "NOUN NOUN"});
  const auto m = bucket_membership(ref, pos, kBuckets);
  EXPECT_EQ(m.at("run"), 2u);  // verb
  EXPECT_EQ(m.at("fly"), 0u);  // adj
  // Tag listed in two buckets: smallest bucket name wins.
  const auto m2 = bucket_membership(sentences({"x"}), tags({"NOUN"}), {{"b", {"NOUN"}}, {"a", {"NOUN"}}});
  EXPECT_EQ(m2.at("x"), 0u);
}

TEST(AdequacyFmeasure, Errors) {
  EXPECT_EQ(error_code([] { word_fmeasure(sentences({"a"}), sentences({"a", "b"}), tags({"X", "X"}), kBuckets); }),
            Errc::LengthMismatch);
  const auto e = testutil::caught(
      [] { word_fmeasure(sentences({"a", "b"}), sentences({"a", "b c"}), tags({"X", "X"}), kBuckets); });
  EXPECT_EQ(e.code(), Errc::PosAlignment);
  EXPECT_EQ(e.line(), 2u);
}

TEST(AdequacyFmeasure, CompareReports) {
  const auto ref = sentences({"the cat sat"});
  const auto pos = tags({"DET NOUN VERB"});
  const auto a = word_fmeasure(ref, ref, pos, kBuckets);
  for (const auto& d : compare_reports(a, a)) {
    EXPECT_EQ(d.delta, 0.0);
    EXPECT_EQ(d.sign(), '=');
  }
  const auto b = word_fmeasure(sentences({"the dog sat"}), ref, pos, kBuckets);
  const auto deltas = compare_reports(a, b);
  EXPECT_EQ(deltas[1].bucket, "noun");
  EXPECT_EQ(deltas[1].sign(), '-');
  AdequacyReport missing = a;
  missing.per_bucket.erase("verb");
  EXPECT_EQ(error_code([&] { compare_reports(a, missing); }), Errc::BucketMismatch);
  AdequacyReport renamed = missing;
  renamed.per_bucket["zzz"] = {};
  EXPECT_EQ(error_code([&] { compare_reports(a, renamed); }), Errc::BucketMismatch);
}

TEST(AdequacyFmeasure, MatchesMultisetOracle) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng);
    const auto got = word_fmeasure(in.hyp, in.ref, in.pos, kBuckets);
    const auto want = oracle::fmeasure_counts(raw(in.hyp), raw(in.ref), raw(in.pos), kBuckets);
    ASSERT_EQ(got.per_bucket.size(), want.size());
    for (const auto& [name, w] : want) {
      const auto& g = got.per_bucket.at(name);
      EXPECT_EQ(g, finalize_bucket(w.matched, w.sys, w.ref)) << trial << " " << name;
      EXPECT_LE(g.matched, std::min(g.sys_count, g.ref_count));
      EXPECT_GE(g.f1, 0.0);
      EXPECT_LE(g.f1, 1.0);
    }
  }
}

TEST(AdequacyFmeasure, BagOfWordsAndDeletion) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng);
    const auto base = word_fmeasure(in.hyp, in.ref, in.pos, kBuckets);
    auto shuffled = in.hyp;
    for (auto& s : shuffled) std::shuffle(s.tokens.begin(), s.tokens.end(), rng);
    for (const auto& [name, b] : word_fmeasure(shuffled, in.ref, in.pos, kBuckets).per_bucket)
      EXPECT_EQ(b, base.per_bucket.at(name));

    // Delete one hypothesis token that was matched: its bucket loses exactly one match.
    const auto membership = bucket_membership(in.ref, in.pos, kBuckets);
    for (std::size_t l = 0; l < in.hyp.size(); ++l) {
      auto& toks = in.hyp[l].tokens;
      for (std::size_t k = 0; k < toks.size(); ++k) {
        auto it = membership.find(toks[k]);
        if (it == membership.end()) continue;
        const auto& rt = in.ref[l].tokens;
        const auto hc = std::count(toks.begin(), toks.end(), toks[k]);
        const auto rc = std::count(rt.begin(), rt.end(), toks[k]);
        if (hc > rc) continue;  // surplus copy, not a match
        const std::string bucket = std::next(kBuckets.begin(), static_cast<long>(it->second))->first;
        auto fewer = in.hyp;
        fewer[l].tokens.erase(fewer[l].tokens.begin() + static_cast<long>(k));
        const auto after = word_fmeasure(fewer, in.ref, in.pos, kBuckets);
        EXPECT_EQ(after.per_bucket.at(bucket).matched + 1, base.per_bucket.at(bucket).matched);
        goto next_trial;
      }
    }
  next_trial:;
  }
}

TEST(AdequacyFmeasure, ThreadInvariant) {
  std::mt19937_64 rng(8);
  Instance big;
  for (int i = 0; i < 50; ++i) {
    auto in = random_instance(rng);
    big.hyp.insert(big.hyp.end(), in.hyp.begin(), in.hyp.end());
    big.ref.insert(big.ref.end(), in.ref.begin(), in.ref.end());
    big.pos.insert(big.pos.end(), in.pos.begin(), in.pos.end());
  }
  const auto one = word_fmeasure(big.hyp, big.ref, big.pos, kBuckets, 1);
  const auto many = word_fmeasure(big.hyp, big.ref, big.pos, kBuckets, 6);
  EXPECT_EQ(one.per_bucket, many.per_bucket);
}
