#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.hpp"

using namespace copydraw;

namespace {

SynthSpec behavior_only(const std::string& preset, std::uint64_t seed) {
  auto s = preset_spec(preset, seed);
  s.neural.enabled = false;
  return s;
}

const SynthSession& default_session() {
  static const SynthSession s = generate_session(preset_spec("default", 1));
  return s;
}

NeuralConfig fast_config() { return NeuralConfig{}; }

}  // namespace

TEST(FoldHygiene, TrainAndTestDisjointForGeneratedSessions) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto spec = behavior_only("default", seed);
    spec.n_blocks = 4 + static_cast<int>(seed);
    spec.trials_per_block = 3;
    spec.first_condition = seed % 2 ? DbsCondition::On : DbsCondition::Off;
    auto s = generate_session(spec).session;
    s.blocks[1].trials[0].excluded = Exclusion::Fragmented;
    const auto trials = included_trials(s);
    for (const auto& split : fold_splits(chrono_folds(s), trials)) {
      std::vector<int> seen(trials.size(), 0);
      for (auto i : split.train) ++seen[i];
      for (auto i : split.test) ++seen[i];
      for (int c : seen) EXPECT_EQ(c, 1);
      for (auto i : split.test) {
        const int b = trials[i].block_index;
        EXPECT_TRUE(b == split.fold.test_on_block || b == split.fold.test_off_block);
      }
      std::set<DbsCondition> conds;
      for (auto i : split.test) conds.insert(trials[i].condition);
      EXPECT_EQ(conds.size(), 2u);
    }
  }
}

TEST(PermutationChance, IndependentOfWorkerCountAndRepeatable) {
  const auto s = generate_session(behavior_only("null", 4)).session;
  const auto d = behavioral_features(s, FeatureSet::Standard);
  const auto splits = fold_splits(chrono_folds(s), d.trials);
  const auto rep = [&](Rng& rng) { return permuted_classification(d.features, d.labels, splits, rng); };
  PermutationConfig pc;
  pc.n_perm = 1000;
  pc.seed = 99;
  pc.workers = 1;
  const auto a = permutation_chance(rep, pc);
  pc.workers = 4;
  const auto b = permutation_chance(rep, pc);
  const auto c = permutation_chance(rep, pc);
  EXPECT_EQ(a.distribution, b.distribution);
  EXPECT_EQ(b.distribution, c.distribution);
  EXPECT_EQ(a.value, b.value);
  pc.seed = 100;
  EXPECT_NE(permutation_chance(rep, pc).distribution, a.distribution);
}

TEST(PermutationChance, OneRelabellingSharedByAllFolds) {
  const std::vector<int> labels = {0, 0, 0, 1, 1, 1, 0, 1};
  Rng a(5), b(5);
  const auto y = permuted(std::span<const int>(labels), a);
  auto sorted = y;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1}));
  // the replicate draws exactly one permutation from its stream
  auto expected = labels;
  b.shuffle(std::span<int>(expected));
  EXPECT_EQ(y, expected);
  EXPECT_EQ(a.next(), b.next());

  // a replicate equals the plain fold loop run on that relabelling
  const auto s = generate_session(behavior_only("null", 5)).session;
  const auto d = behavioral_features(s, FeatureSet::Standard);
  const auto splits = fold_splits(chrono_folds(s), d.trials);
  Rng r1(9), r2(9);
  const double rep = permuted_classification(d.features, d.labels, splits, r1);
  const auto yl = permuted(std::span<const int>(d.labels), r2);
  EXPECT_EQ(rep, mean(classification_cv(d.features, yl, splits)));
}

TEST(BehavioralDecode, PlantedSpeedShiftDecoded) {
  const auto s = generate_session(behavior_only("default", 1)).session;
  const auto r = behavioral_decode(s, FeatureSet::Standard, std::nullopt);
  EXPECT_EQ(r.report.folds.size(), 6u);
  EXPECT_GE(r.report.mean, 0.9);
  double sum = 0;
  for (const auto& f : r.report.folds) sum += f.value;
  EXPECT_DOUBLE_EQ(r.report.mean, sum / 6.0);
  EXPECT_EQ(r.session_model.scores.size(), 144);
  EXPECT_GT(r.icc, 0.5);
}

TEST(BehavioralDecode, ChanceLevelOnNullSessionInExpectedInterval) {
  const auto s = generate_session(behavior_only("null", 2)).session;
  PermutationConfig pc;
  pc.n_perm = 1000;
  pc.seed = 7;
  const auto r = behavioral_decode(s, FeatureSet::Standard, pc);
  ASSERT_TRUE(r.report.chance);
  EXPECT_GE(r.report.chance->value, 0.55);
  EXPECT_LE(r.report.chance->value, 0.70);
}

TEST(BehavioralDecode, ShuffledLabelsAverageToHalf) {
  const auto s = generate_session(behavior_only("default", 3)).session;
  const auto d = behavioral_features(s, FeatureSet::Standard);
  const auto splits = fold_splits(chrono_folds(s), d.trials);
  Rng rng(11);
  double total = 0;
  const int reps = 200;
  for (int i = 0; i < reps; ++i) {
    auto y = d.labels;
    rng.shuffle(std::span<int>(y));
    // a fold may end up single-class after shuffling; redraw in that case
    try {
      total += mean(classification_cv(d.features, y, splits));
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), Errc::SingleClass);
      --i;
    }
  }
  EXPECT_NEAR(total / reps, 0.5, 0.05);
}

TEST(BehavioralDecode, VerticalAccelerationEffectDominatesShap) {
  auto spec = behavior_only("default", 3);
  spec.kinematics.on_speed_gain = 1.0;
  spec.kinematics.on_tremor_y_px = 0.5;
  const auto r = behavioral_decode(generate_session(spec).session, FeatureSet::Standard, std::nullopt);
  const auto& names = r.shap.names;
  const auto top = std::max_element(r.shap.mean_abs.begin(), r.shap.mean_abs.end()) - r.shap.mean_abs.begin();
  EXPECT_EQ(names[static_cast<std::size_t>(top)], "accel_y");
  double total = 0, accel = 0;
  for (std::size_t j = 0; j < names.size(); ++j) {
    total += r.shap.mean_abs[j];
    if (names[j] == "accel_y" || names[j] == "accel") accel += r.shap.mean_abs[j];
  }
  EXPECT_GT(accel / total, 0.5);
  const auto ay = std::find(names.begin(), names.end(), "accel_y") - names.begin();
  EXPECT_GT(r.shap.signed_importance[static_cast<std::size_t>(ay)], 0.0);  // larger under ON
}

TEST(NeuralDecode, PlantedComodulationDecoded) {
  const auto& ss = default_session();
  const auto trials = included_trials(ss.session);
  const auto z = copydraw_scores(ss.session);
  const auto r = neural_decode(ss.session, trials, z, TargetKind::CopyDrawScore, fast_config(), std::nullopt, 1);
  EXPECT_GE(r.report.mean, 0.8);
  EXPECT_EQ(r.marker.bank_size(), 40u);
  EXPECT_EQ(r.marker.selected.size(), 8u);
  std::size_t counted = 0;
  for (auto c : r.band_counts) counted += c;
  EXPECT_EQ(counted, 6u * 8u);
  // the planted source sits in beta; MRMR spreads picks across bands, but a beta filter is always kept
  EXPECT_TRUE(std::any_of(r.marker.selected.begin(), r.marker.selected.end(),
                          [&](std::size_t j) { return r.marker.band_of(j) == 2; }));
}

TEST(NeuralDecode, FrozenTransformsGiveIdenticalPredictions) {
  const auto& ss = default_session();
  const auto trials = included_trials(ss.session);
  const auto z = copydraw_scores(ss.session);
  const auto cfg = fast_config();
  const auto data = prepare_neural(ss.session, trials, cfg, 1);
  const auto splits = fold_splits(chrono_folds(ss.session), trials);
  const auto& split = splits.front();
  const auto z_train = gather(std::span<const double>(z), std::span<const std::size_t>(split.train));
  const auto marker = fit_marker(data.modality, data.sample_rate, data.covs, data.ecog_bank, split.train, z_train, cfg);
  const auto reloaded = marker_from_json(nlohmann::json::parse(marker_to_json(marker).dump()));
  for (auto i : split.test) {
    const auto& epoch = *trial_at(ss.session, trials[i]).neural;
    const double a = marker.predict(epoch);
    EXPECT_EQ(a, marker.predict(epoch));
    EXPECT_EQ(a, reloaded.predict(epoch));
    std::vector<const Eigen::MatrixXd*> ptrs;
    for (const auto& band : data.covs) ptrs.push_back(&band[i]);
    EXPECT_NEAR(a, marker.predict_from_bank(marker.bank_from_covs(ptrs)), 1e-9);
  }
  // two cross-validation passes agree exactly
  EXPECT_EQ(neural_cv(data, z, splits, cfg).predictions, neural_cv(data, z, splits, cfg).predictions);
}

TEST(NeuralDecode, WhiteNoiseBelowChanceAndChancePositive) {
  const auto ss = generate_session(preset_spec("white-noise", 2));
  const auto trials = included_trials(ss.session);
  const auto z = copydraw_scores(ss.session);
  PermutationConfig pc;
  pc.n_perm = 100;
  pc.seed = 3;
  const auto r = neural_decode(ss.session, trials, z, TargetKind::CopyDrawScore, fast_config(), pc, 1);
  ASSERT_TRUE(r.report.chance);
  EXPECT_GT(r.report.chance->value, 0.0);
  EXPECT_LT(std::abs(r.report.mean), 0.3);
}

TEST(NeuralDecode, EcogBankAndDecoding) {
  const auto ss = generate_session(preset_spec("ecog", 1));
  const auto trials = included_trials(ss.session);
  const auto z = copydraw_scores(ss.session);
  const auto r = neural_decode(ss.session, trials, z, TargetKind::CopyDrawScore, fast_config(), std::nullopt, 1);
  EXPECT_EQ(r.marker.bank_size(), 20u);
  EXPECT_EQ(r.marker.selected.size(), 8u);
  EXPECT_GE(r.report.mean, 0.8);
}

TEST(NeuralDecode, PerfectSentinelTrialsLeftOut) {
  const auto& ss = default_session();
  const auto trials = included_trials(ss.session);
  auto z = copydraw_scores(ss.session);
  z[5] = INFINITY;
  const auto r = neural_decode(ss.session, trials, z, TargetKind::TaskPerformance, fast_config(), std::nullopt, 1);
  EXPECT_EQ(r.trials.size(), trials.size() - 1);
  EXPECT_ERRC(neural_decode(ss.session, trials, std::vector<double>(3, 0.0), TargetKind::Custom, fast_config(), std::nullopt),
              Errc::DimensionMismatch);
}

TEST(NeuralDecode, MissingEpochsRejected) {
  auto spec = testutil::small_spec(5);
  spec.neural.enabled = false;
  const auto s = generate_session(spec).session;
  const auto trials = included_trials(s);
  std::vector<double> z(trials.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<double>(i);
  EXPECT_ERRC(neural_decode(s, trials, z, TargetKind::Custom, fast_config(), std::nullopt), Errc::MissingEpochs);
}

TEST(Controllability, DbsModulatedSourceIsControllable) {
  const auto ss = generate_session(preset_spec("dbs-marker", 1));
  const auto trials = included_trials(ss.session);
  const auto z = copydraw_scores(ss.session);
  const auto nr = neural_decode(ss.session, trials, z, TargetKind::CopyDrawScore, fast_config(), std::nullopt, 1);
  const auto c = controllability(ss.session, nr.marker, std::nullopt, 1);
  EXPECT_GE(c.report.mean, 0.9);
  EXPECT_EQ(c.features.cols(), 8);
}

TEST(Controllability, ScrambledConditionsFallToChance) {
  auto ss = generate_session(preset_spec("dbs-marker", 2));
  const auto trials = included_trials(ss.session);
  const auto z = copydraw_scores(ss.session);
  const auto nr = neural_decode(ss.session, trials, z, TargetKind::CopyDrawScore, fast_config(), std::nullopt, 1);
  // swap the labels of every other adjacent block pair, so condition no longer tracks the planted source
  auto& blocks = ss.session.blocks;
  Rng rng(5);
  for (std::size_t b = 0; b + 1 < blocks.size(); b += 2) {
    if (rng.below(2)) continue;
    std::swap(blocks[b].condition, blocks[b + 1].condition);
  }
  PermutationConfig pc;
  pc.n_perm = 200;
  pc.seed = 1;
  const auto c = controllability(ss.session, nr.marker, pc, 1);
  ASSERT_TRUE(c.report.chance);
  EXPECT_FALSE(c.report.significant()) << c.report.mean << " vs " << c.report.chance->value;
}
