#pragma once

// Chronological cross-validation: each test fold is a pair of adjacent blocks
// with opposite DBS conditions; every other block trains.

#include <cstddef>
#include <vector>

#include "copydraw/error.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

struct ChronoFold {
  int test_on_block = 0;
  int test_off_block = 0;
  std::vector<int> train_blocks;
};

struct BlockLabel {
  int index = 0;
  DbsCondition condition = DbsCondition::Off;
};

/// Greedy adjacent pairing: walk the blocks in order and pair block i with
/// i + 1 whenever their conditions differ, then continue at i + 2; otherwise
/// advance by one. Unpaired blocks only ever appear in training sets.
inline std::vector<ChronoFold> chrono_folds(const std::vector<BlockLabel>& blocks) {
  bool has_on = false, has_off = false;
  for (const auto& b : blocks) (b.condition == DbsCondition::On ? has_on : has_off) = true;
  if (!has_on || !has_off) fail(Errc::SingleCondition, "chrono-CV needs both ON and OFF blocks");

  std::vector<ChronoFold> folds;
  for (std::size_t i = 0; i + 1 < blocks.size();) {
    if (blocks[i].condition != blocks[i + 1].condition) {
      ChronoFold f;
      const auto& on = blocks[i].condition == DbsCondition::On ? blocks[i] : blocks[i + 1];
      const auto& off = blocks[i].condition == DbsCondition::On ? blocks[i + 1] : blocks[i];
      f.test_on_block = on.index;
      f.test_off_block = off.index;
      for (std::size_t j = 0; j < blocks.size(); ++j)
        if (j != i && j != i + 1) f.train_blocks.push_back(blocks[j].index);
      if (f.train_blocks.empty())
        fail(Errc::EmptyTrain, "fold testing blocks " + std::to_string(blocks[i].index) + " and " +
                                   std::to_string(blocks[i + 1].index) + " leaves no training blocks");
      folds.push_back(std::move(f));
      i += 2;
    } else {
      ++i;
    }
  }
  return folds;
}

inline std::vector<ChronoFold> chrono_folds(const Session& s) {
  std::vector<BlockLabel> labels;
  for (const auto& b : s.blocks) labels.push_back({b.index, b.condition});
  return chrono_folds(labels);
}

/// A fold resolved to row indices of a trial list.
struct FoldSplit {
  ChronoFold fold;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline std::vector<FoldSplit> fold_splits(const std::vector<ChronoFold>& folds, const std::vector<TrialRef>& trials) {
  std::vector<FoldSplit> out;
  for (const auto& f : folds) {
    FoldSplit s;
    s.fold = f;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const int b = trials[i].block_index;
      if (b == f.test_on_block || b == f.test_off_block)
        s.test.push_back(i);
      else
        s.train.push_back(i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace copydraw
