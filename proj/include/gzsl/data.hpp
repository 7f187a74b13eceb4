#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "gzsl/linalg.hpp"
#include "gzsl/prototypes.hpp"
#include "gzsl/rng.hpp"

namespace gzsl {

enum class Split : std::int64_t { Train = 0, Val = 1, Test = 2 };

/// Features, class-id labels and split tags, validated against a prototype set. The seen/unseen
/// partition is the one carried by the prototypes. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  /// Throws ValidationError unless: one label and split per row, every label has a prototype,
  /// every train-split label is a seen class.
  Dataset(Matrix features, std::vector<std::int64_t> labels, std::vector<Split> split,
          PrototypeSet prototypes);

  const Matrix& features() const { return features_; }
  const std::vector<std::int64_t>& labels() const { return labels_; }
  const std::vector<Split>& split() const { return split_; }
  const PrototypeSet& prototypes() const { return prototypes_; }

  std::size_t size() const { return labels_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }
  /// Prototype column of each row's label.
  const std::vector<std::size_t>& label_columns() const { return label_columns_; }

  std::vector<std::size_t> indices(Split s) const;
  /// Rows of split s whose label is seen (or unseen).
  std::vector<std::size_t> indices(Split s, bool seen) const;

 private:
  Matrix features_;
  std::vector<std::int64_t> labels_;
  std::vector<Split> split_;
  PrototypeSet prototypes_;
  std::vector<std::size_t> label_columns_;
};

/// Features standing in for generator output on unseen classes.
struct GeneratedSet {
  Matrix features;
  std::vector<std::int64_t> labels;
  std::vector<std::size_t> label_columns;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

/// Validates labels against the unseen classes and requires at least one sample per unseen class.
GeneratedSet make_generated_set(Matrix features, std::vector<std::int64_t> labels,
                                const PrototypeSet& prototypes);

struct SynthConfig {
  std::size_t num_seen = 10;
  std::size_t num_unseen = 4;
  std::size_t feature_dim = 32;
  std::size_t proto_dim = 12;
  std::size_t samples_per_class = 200;
  double noise_sigma = 0.3;
  double rho = 0.3;
  std::uint64_t seed = 0;
  /// Generated samples per unseen class; 0 means "same as the seen-class training count".
  std::size_t generated_per_class = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

inline constexpr double kGeneratedNoiseInflation = 1.5;
inline constexpr double kSeenValFraction = 0.15;
inline constexpr double kSeenTestFraction = 0.15;

struct SynthData {
  Dataset dataset;
  GeneratedSet generated;
  PrototypeSet prototypes;
};

/// Desk-scale stand-in for real features and generator samples:
///  - prototypes phi_c = sqrt(rho) z0 + sqrt(1 - rho) z_c (z ~ N(0, I_A)), so every pair of
///    classes has expected cosine about rho;
///  - features x = M phi_c + sigma eps with one random M (D x A, entries N(0, 1/A));
///  - seen classes split 70/15/15 train/val/test, unseen classes 50/50 val/test;
///  - generated unseen features from the same process with noise inflated by 1.5.
SynthData synth_generate(const SynthConfig& cfg, Rng& rng);
/// Seeds from cfg.seed.
SynthData synth_generate(const SynthConfig& cfg);

/// Per-epoch batches of positions 0..n-1: a permutation seeded by (rng seed, epoch), cut into
/// chunks of batch_size with a possibly short tail.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 const Rng& rng, std::size_t epoch);

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& prototypes_path,
                     const std::filesystem::path& split_path);

/// Standard file names inside a data directory.
struct DataLayout {
  std::filesystem::path dir;
  std::filesystem::path features() const { return dir / "features.gzm"; }
  std::filesystem::path labels() const { return dir / "labels.txt"; }
  std::filesystem::path split() const { return dir / "split.txt"; }
  std::filesystem::path prototypes() const { return dir / "prototypes.gzm"; }
  std::filesystem::path generated_features() const { return dir / "generated_features.gzm"; }
  std::filesystem::path generated_labels() const { return dir / "generated_labels.txt"; }
};

Dataset load_dataset(const DataLayout& layout);
void save_dataset(const DataLayout& layout, const Dataset& dataset);
GeneratedSet load_generated(const DataLayout& layout, const PrototypeSet& prototypes);
void save_generated(const DataLayout& layout, const GeneratedSet& generated);

}  // namespace gzsl
