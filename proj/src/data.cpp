#include "sbgl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

namespace sbgl {

namespace {

std::uint64_t pair_key(index_t u, index_t v) {
  return static_cast<std::uint64_t>(u) << 32 | static_cast<std::uint64_t>(v);
}

}  // namespace

RawDataset load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Err::Io, "cannot open " + path);
  RawDataset ds;
  ds.name = path;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  long line_no = 0;
  auto intern = [](const std::string& raw, std::vector<std::string>& ids,
                   std::unordered_map<std::string, index_t>& index) {
    auto it = index.find(raw);
    if (it != index.end()) return it->second;
    index_t id = static_cast<index_t>(ids.size());
    ids.push_back(raw);
    index.emplace(raw, id);
    return id;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto where = [&] { return path + ":" + std::to_string(line_no); };
    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos)
      raise(Err::Parse, where() + ": expected exactly three tab-separated fields");
    std::string raw_u = line.substr(0, tab1);
    std::string raw_v = line.substr(tab1 + 1, tab2 - tab1 - 1);
    std::string raw_sign = line.substr(tab2 + 1);
    if (raw_u.empty() || raw_v.empty())
      raise(Err::Parse, where() + ": empty node id");
    Sign sign;
    if (raw_sign == "1")
      sign = Sign::Positive;
    else if (raw_sign == "-1")
      sign = Sign::Negative;
    else
      raise(Err::Parse, where() + ": sign must be 1 or -1, got '" + raw_sign + "'");
    index_t u = intern(raw_u, ds.u_ids, ds.u_index);
    index_t v = intern(raw_v, ds.v_ids, ds.v_index);
    if (!seen.insert(pair_key(u, v)).second)
      raise(Err::DuplicateEdge, where() + ": pair (" + raw_u + ", " + raw_v + ") repeats");
    ds.edges.push_back({u, v, sign});
  }
  return ds;
}

void save_edge_list(const RawDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(Err::Io, "cannot open " + path + " for writing");
  for (const SignedEdge& e : ds.edges) {
    out << ds.u_ids[static_cast<std::size_t>(e.u)] << '\t'
        << ds.v_ids[static_cast<std::size_t>(e.v)] << '\t'
        << (e.sign == Sign::Positive ? "1" : "-1") << '\n';
  }
  if (!out) raise(Err::Io, "write failed: " + path);
}

EdgeSplit split(const RawDataset& ds, double train_frac, double val_frac,
                std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0))
    raise(Err::InvalidRatio, "split fractions must be positive and sum below 1");
  const index_t m = static_cast<index_t>(ds.edges.size());
  const index_t n_train = static_cast<index_t>(std::floor(train_frac * static_cast<double>(m)));
  const index_t n_val = static_cast<index_t>(std::floor(val_frac * static_cast<double>(m)));
  const index_t n_test = m - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    raise(Err::EmptySplit, "split of " + std::to_string(m) + " edges leaves an empty part (" +
                               std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                               std::to_string(n_test) + ")");
  std::vector<index_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), index_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  EdgeSplit sp;
  sp.seed = seed;
  sp.train.reserve(static_cast<std::size_t>(n_train));
  sp.val.reserve(static_cast<std::size_t>(n_val));
  sp.test.reserve(static_cast<std::size_t>(n_test));
  for (index_t i = 0; i < m; ++i) {
    const SignedEdge& e = ds.edges[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    if (i < n_train)
      sp.train.push_back(e);
    else if (i < n_train + n_val)
      sp.val.push_back(e);
    else
      sp.test.push_back(e);
  }
  return sp;
}

SignedBiadjacency training_graph(const EdgeSplit& sp, index_t n_u, index_t n_v) {
  return build_graph(sp.train, n_u, n_v);
}

namespace {

// Draws m distinct (u, v) pairs, order fixed by the rng stream.
std::vector<std::pair<index_t, index_t>> sample_pairs(index_t n_u, index_t n_v, index_t m,
                                                      Rng& rng) {
  if (n_u < 1 || n_v < 1) raise(Err::InvalidArgument, "parts must be non-empty");
  if (m < 0) raise(Err::InvalidArgument, "negative edge count");
  const index_t capacity = n_u * n_v;
  if (m > capacity)
    raise(Err::TooManyEdges, std::to_string(m) + " edges requested, only " +
                                 std::to_string(capacity) + " pairs exist");
  std::vector<std::pair<index_t, index_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(m));
  if (m * 2 >= capacity) {
    // Dense regime: enumerate, shuffle, take a prefix.
    std::vector<index_t> all(static_cast<std::size_t>(capacity));
    std::iota(all.begin(), all.end(), index_t{0});
    rng.shuffle(all);
    for (index_t i = 0; i < m; ++i) {
      index_t flat = all[static_cast<std::size_t>(i)];
      pairs.emplace_back(flat / n_v, flat % n_v);
    }
  } else {
    std::vector<bool> used(static_cast<std::size_t>(capacity), false);
    while (static_cast<index_t>(pairs.size()) < m) {
      index_t flat = static_cast<index_t>(rng.below(static_cast<std::uint64_t>(capacity)));
      if (used[static_cast<std::size_t>(flat)]) continue;
      used[static_cast<std::size_t>(flat)] = true;
      pairs.emplace_back(flat / n_v, flat % n_v);
    }
  }
  return pairs;
}

RawDataset dataset_from(const std::string& name, index_t n_u, index_t n_v,
                        std::vector<SignedEdge> edges) {
  RawDataset ds;
  ds.name = name;
  ds.edges = std::move(edges);
  ds.u_ids.reserve(static_cast<std::size_t>(n_u));
  ds.v_ids.reserve(static_cast<std::size_t>(n_v));
  for (index_t i = 0; i < n_u; ++i) {
    ds.u_ids.push_back("u" + std::to_string(i));
    ds.u_index.emplace(ds.u_ids.back(), i);
  }
  for (index_t i = 0; i < n_v; ++i) {
    ds.v_ids.push_back("v" + std::to_string(i));
    ds.v_index.emplace(ds.v_ids.back(), i);
  }
  return ds;
}

}  // namespace

RawDataset synth_graph(index_t n_u, index_t n_v, index_t m, double pos_fraction,
                       std::uint64_t seed) {
  if (!(pos_fraction >= 0.0 && pos_fraction <= 1.0))
    raise(Err::InvalidArgument, "positive fraction must lie in [0, 1]");
  Rng rng(seed);
  auto pairs = sample_pairs(n_u, n_v, m, rng);
  std::vector<SignedEdge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    Sign s = rng.uniform() < pos_fraction ? Sign::Positive : Sign::Negative;
    edges.push_back({u, v, s});
  }
  return dataset_from("synthetic", n_u, n_v, std::move(edges));
}

RawDataset synth_planted(const PlantedConfig& config) {
  if (config.pos_count < 0 || config.pos_count > config.m)
    raise(Err::InvalidArgument, "positive count outside [0, m]");
  if (!(config.flip_prob >= 0.0 && config.flip_prob < 1.0))
    raise(Err::InvalidArgument, "flip probability must lie in [0, 1)");
  if (config.latent_dim < 1) raise(Err::InvalidArgument, "latent dimension must be positive");
  if (config.bias_scale < 0.0) raise(Err::InvalidArgument, "bias scale must be non-negative");
  Rng rng(config.seed);
  Mat z_u(config.n_u, config.latent_dim), z_v(config.n_v, config.latent_dim);
  rng.fill_gaussian(z_u);
  rng.fill_gaussian(z_v);
  // Cubed-gaussian tails: most nodes sit near zero while a few carry strong
  // propensities, so the minority sign clusters on identifiable nodes the
  // way it does in rating data.
  auto heavy = [&rng]() {
    double g = rng.gaussian();
    return g * g * g;
  };
  Vec b_u(config.n_u), b_v(config.n_v);
  for (index_t i = 0; i < config.n_u; ++i) b_u(i) = heavy();
  for (index_t i = 0; i < config.n_v; ++i) b_v(i) = heavy();
  auto pairs = sample_pairs(config.n_u, config.n_v, config.m, rng);

  // Rank edges by affinity: per-node sign propensities plus a normalized
  // low-rank interaction, echoing how rating data mixes node-level bias with
  // taste alignment. The top pos_count become positive, which pins the class
  // balance exactly before noise.
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(config.latent_dim));
  std::vector<index_t> order(pairs.size());
  std::iota(order.begin(), order.end(), index_t{0});
  std::vector<double> affinity(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    affinity[i] = config.bias_scale * (b_u(pairs[i].first) + b_v(pairs[i].second)) +
                  inv_sqrt_dim * z_u.row(pairs[i].first).dot(z_v.row(pairs[i].second));
  std::sort(order.begin(), order.end(), [&](index_t a, index_t b) {
    if (affinity[static_cast<std::size_t>(a)] != affinity[static_cast<std::size_t>(b)])
      return affinity[static_cast<std::size_t>(a)] > affinity[static_cast<std::size_t>(b)];
    return a < b;
  });
  std::vector<Sign> signs(pairs.size(), Sign::Negative);
  for (index_t i = 0; i < config.pos_count; ++i)
    signs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Sign::Positive;

  if (config.flip_prob > 0.0) {
    for (Sign& s : signs)
      if (rng.uniform() < config.flip_prob)
        s = s == Sign::Positive ? Sign::Negative : Sign::Positive;
    // Noise drifts the counts; flip random members of the surplus class back
    // until the planted balance is restored.
    index_t pos_now = 0;
    for (Sign s : signs) pos_now += s == Sign::Positive ? 1 : 0;
    index_t surplus = pos_now - config.pos_count;
    Sign from = surplus > 0 ? Sign::Positive : Sign::Negative;
    std::vector<index_t> members;
    for (std::size_t i = 0; i < signs.size(); ++i)
      if (signs[i] == from) members.push_back(static_cast<index_t>(i));
    rng.shuffle(members);
    for (index_t i = 0; i < std::abs(surplus); ++i)
      signs[static_cast<std::size_t>(members[static_cast<std::size_t>(i)])] =
          from == Sign::Positive ? Sign::Negative : Sign::Positive;
  }

  std::vector<SignedEdge> edges;
  edges.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    edges.push_back({pairs[i].first, pairs[i].second, signs[i]});
  return dataset_from("planted", config.n_u, config.n_v, std::move(edges));
}

const std::vector<PlantedPreset>& planted_presets() {
  // Flip rates shrink with class imbalance: restoring the planted balance
  // after noise recruits mislabeled majority edges into the minority class,
  // so a heavy flip would drown the genuine minority.
  static const std::vector<PlantedPreset> presets = {
      {"review", {182, 304, 1170, 464, 0.05, 2, 3.0, 0}},
      {"bonanza", {7919, 1973, 36543, 35805, 0.002, 2, 3.0, 0}},
      {"ml1m", {6040, 3706, 1000209, 836478, 0.02, 2, 3.0, 0}},
      {"amazon-dm", {11796, 16565, 169781, 165777, 0.005, 2, 3.0, 0}},
  };
  return presets;
}

std::optional<PlantedConfig> find_preset(const std::string& name) {
  for (const PlantedPreset& p : planted_presets())
    if (p.name == name) return p.config;
  return std::nullopt;
}

DatasetStats stats(const RawDataset& ds) {
  DatasetStats s;
  s.n_u = ds.n_u();
  s.n_v = ds.n_v();
  s.m = static_cast<index_t>(ds.edges.size());
  for (const SignedEdge& e : ds.edges) s.m_pos += e.sign == Sign::Positive ? 1 : 0;
  s.m_neg = s.m - s.m_pos;
  s.pos_fraction = s.m == 0 ? 0.0 : static_cast<double>(s.m_pos) / static_cast<double>(s.m);
  return s;
}

}  // namespace sbgl
