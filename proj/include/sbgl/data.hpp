#pragma once

#include "sbgl/graph.hpp"

#include <optional>
#include <string>
#include <unordered_map>

namespace sbgl {

/// An edge list plus the mapping between raw string ids and the dense
/// indices used everywhere downstream. Dense ids are assigned in order of
/// first appearance, so loading is deterministic.
struct RawDataset {
  std::string name;
  std::vector<SignedEdge> edges;          // dense ids
  std::vector<std::string> u_ids, v_ids;  // dense id -> raw id
  std::unordered_map<std::string, index_t> u_index, v_index;

  index_t n_u() const { return static_cast<index_t>(u_ids.size()); }
  index_t n_v() const { return static_cast<index_t>(v_ids.size()); }
};

/// Reads the canonical tab-separated format: `u<TAB>v<TAB>sign` per line
/// with sign in {1, -1}, `#` starting a comment line, blank lines ignored.
/// Malformed lines and repeated (u, v) pairs are errors that name the line.
RawDataset load_edge_list(const std::string& path);

/// Writes the same format. A dataset that came from load_edge_list reloads
/// bitwise identically; other datasets reload up to id renumbering, since
/// dense ids are reassigned by first appearance and isolated nodes have no
/// representation in the format.
void save_edge_list(const RawDataset& ds, const std::string& path);

struct EdgeSplit {
  std::vector<SignedEdge> train, val, test;
  std::uint64_t seed = 0;
};

/// Splits edges by a seeded permutation: floor(train_frac * m) train edges,
/// floor(val_frac * m) validation edges, remainder test. The draw is a plain
/// shuffle, not stratified by sign. Fractions must be positive and leave a
/// non-empty test remainder; any empty part is an error.
EdgeSplit split(const RawDataset& ds, double train_frac, double val_frac,
                std::uint64_t seed);

/// Graph over the training edges only. Validation and test pairs must never
/// reach propagation, so this is the single place a training graph is made.
SignedBiadjacency training_graph(const EdgeSplit& sp, index_t n_u, index_t n_v);

/// Random bipartite graph with m distinct pairs, each positive with
/// probability pos_fraction. Used by the scaling benchmark.
RawDataset synth_graph(index_t n_u, index_t n_v, index_t m, double pos_fraction,
                       std::uint64_t seed);

/// Generator for datasets with planted structure: each node gets a scalar
/// sign propensity and a low-dimensional latent vector, edge affinity is
/// bias_scale * (b_u + b_v) plus the normalized latent inner product, the
/// affinity threshold is chosen so that exactly pos_count edges are
/// positive, and flip_prob then relabels a random subset (with an exact
/// count fix-up afterwards) to set the noise floor. The bias term dominates
/// by default, mirroring rating data where most of the sign signal is
/// per-node propensity rather than pairwise taste.
struct PlantedConfig {
  index_t n_u = 0;
  index_t n_v = 0;
  index_t m = 0;
  index_t pos_count = 0;
  double flip_prob = 0.0;
  int latent_dim = 3;
  double bias_scale = 1.0;
  std::uint64_t seed = 0;
};

RawDataset synth_planted(const PlantedConfig& config);

/// Named generator presets mirroring the shapes of the four benchmark
/// datasets (part sizes, edge count, positive count). The noise level per
/// preset is tuned so a well-configured model lands in a realistic quality
/// range rather than saturating.
struct PlantedPreset {
  std::string name;
  PlantedConfig config;
};

const std::vector<PlantedPreset>& planted_presets();
std::optional<PlantedConfig> find_preset(const std::string& name);

struct DatasetStats {
  index_t n_u = 0, n_v = 0, m = 0, m_pos = 0, m_neg = 0;
  double pos_fraction = 0.0;
};

DatasetStats stats(const RawDataset& ds);

}  // namespace sbgl
