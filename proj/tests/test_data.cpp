#include <doctest.h>

#include <sbgl/data.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace sbgl;

namespace {

std::string write_temp(const char* stem, const std::string& body) {
  std::string path = (std::filesystem::temp_directory_path() / stem).string();
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path;
}

std::set<std::pair<index_t, index_t>> pair_set(const std::vector<SignedEdge>& edges) {
  std::set<std::pair<index_t, index_t>> s;
  for (const SignedEdge& e : edges) s.emplace(e.u, e.v);
  return s;
}

}  // namespace

TEST_CASE("edge list parsing handles comments, blank lines, and crlf") {
  std::string path = write_temp("sbgl_parse_ok.tsv",
                                "# review graph\n"
                                "alice\titem9\t1\r\n"
                                "\n"
                                "bob\titem9\t-1\n"
                                "alice\titem3\t-1\n"
                                "# trailing note\n");
  RawDataset ds = load_edge_list(path);
  std::remove(path.c_str());

  REQUIRE(ds.edges.size() == 3);
  CHECK(ds.n_u() == 2);
  CHECK(ds.n_v() == 2);
  // Ids are interned in first-appearance order.
  CHECK(ds.u_ids[0] == "alice");
  CHECK(ds.u_ids[1] == "bob");
  CHECK(ds.v_ids[0] == "item9");
  CHECK(ds.v_ids[1] == "item3");
  CHECK(ds.u_index.at("bob") == 1);
  CHECK(ds.edges[0].u == 0);
  CHECK(ds.edges[0].v == 0);
  CHECK(ds.edges[0].sign == Sign::Positive);
  CHECK(ds.edges[1].u == 1);
  CHECK(ds.edges[1].sign == Sign::Negative);
  CHECK(ds.edges[2].v == 1);

  DatasetStats st = stats(ds);
  CHECK(st.m == 3);
  CHECK(st.m_pos == 1);
  CHECK(st.m_neg == 2);
  CHECK(st.pos_fraction == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("edge lists round-trip through save and load") {
  // A dataset loaded from disk has ids in first-appearance order, so a
  // second save/load cycle must reproduce it exactly.
  RawDataset synth = synth_graph(12, 9, 40, 0.6, 5);
  std::string path =
      (std::filesystem::temp_directory_path() / "sbgl_roundtrip.tsv").string();
  save_edge_list(synth, path);
  RawDataset first = load_edge_list(path);
  save_edge_list(first, path);
  RawDataset second = load_edge_list(path);
  std::remove(path.c_str());

  REQUIRE(second.edges.size() == first.edges.size());
  CHECK(second.u_ids == first.u_ids);
  CHECK(second.v_ids == first.v_ids);
  for (std::size_t i = 0; i < first.edges.size(); ++i) {
    CHECK(second.edges[i].u == first.edges[i].u);
    CHECK(second.edges[i].v == first.edges[i].v);
    CHECK(second.edges[i].sign == first.edges[i].sign);
  }

  // The synthetic original survives as the same labeled graph: raw-id edge
  // triples match even though dense ids were reassigned.
  REQUIRE(first.edges.size() == synth.edges.size());
  for (std::size_t i = 0; i < synth.edges.size(); ++i) {
    CHECK(first.u_ids[first.edges[i].u] == synth.u_ids[synth.edges[i].u]);
    CHECK(first.v_ids[first.edges[i].v] == synth.v_ids[synth.edges[i].v]);
    CHECK(first.edges[i].sign == synth.edges[i].sign);
  }
}

TEST_CASE("malformed edge lists fail with the offending line") {
  struct BadCase {
    const char* stem;
    const char* body;
    const char* fragment;  // expected substring of the message
  };
  const BadCase cases[] = {
      {"sbgl_bad_fields.tsv", "a\tb\t1\nx\ty\n", ":2"},
      {"sbgl_bad_sign.tsv", "a\tb\t2\n", ":1"},
      {"sbgl_bad_extra.tsv", "a\tb\t1\textra\n", ":1"},
      {"sbgl_bad_empty_id.tsv", "\tb\t1\n", ":1"},
      {"sbgl_bad_dup.tsv", "a\tb\t1\nc\td\t1\na\tb\t-1\n", ":3"},
  };
  for (const BadCase& c : cases) {
    std::string path = write_temp(c.stem, c.body);
    try {
      load_edge_list(path);
      FAIL("expected a parse failure for ", c.stem);
    } catch (const Error& e) {
      CHECK((e.code() == Err::Parse || e.code() == Err::DuplicateEdge));
      CHECK(std::string(e.what()).find(c.fragment) != std::string::npos);
    }
    std::remove(path.c_str());
  }
  CHECK_THROWS_AS(load_edge_list("/nonexistent/sbgl_missing.tsv"), Error);
}

TEST_CASE("splits use floor counts and leave the remainder to test") {
  RawDataset ds = synth_graph(10, 8, 20, 0.5, 11);
  EdgeSplit sp = split(ds, 0.85, 0.05, 4);
  CHECK(sp.train.size() == 17);
  CHECK(sp.val.size() == 1);
  CHECK(sp.test.size() == 2);

  // The three parts partition the edge set exactly.
  auto all = pair_set(ds.edges);
  std::set<std::pair<index_t, index_t>> seen;
  for (const auto* part : {&sp.train, &sp.val, &sp.test})
    for (const SignedEdge& e : *part) {
      CHECK(all.count({e.u, e.v}) == 1);
      CHECK(seen.emplace(e.u, e.v).second);  // no pair appears twice
    }
  CHECK(seen.size() == all.size());
}

TEST_CASE("split determinism and seed sensitivity") {
  RawDataset ds = synth_graph(15, 12, 60, 0.5, 21);
  EdgeSplit a = split(ds, 0.8, 0.1, 9);
  EdgeSplit b = split(ds, 0.8, 0.1, 9);
  REQUIRE(a.train.size() == b.train.size());
  bool same = true;
  for (std::size_t i = 0; i < a.train.size(); ++i)
    same = same && a.train[i].u == b.train[i].u && a.train[i].v == b.train[i].v;
  CHECK(same);

  EdgeSplit c = split(ds, 0.8, 0.1, 10);
  bool differs = a.train.size() != c.train.size();
  for (std::size_t i = 0; !differs && i < a.train.size(); ++i)
    differs = a.train[i].u != c.train[i].u || a.train[i].v != c.train[i].v;
  CHECK(differs);
}

TEST_CASE("degenerate splits are rejected") {
  RawDataset ds = synth_graph(8, 6, 10, 0.5, 2);
  // floor(0.05 * 10) = 0 validation edges
  CHECK_THROWS_AS(split(ds, 0.9, 0.05, 1), Error);
  // fractions must leave a test remainder
  CHECK_THROWS_AS(split(ds, 0.9, 0.1, 1), Error);
  CHECK_THROWS_AS(split(ds, 0.0, 0.5, 1), Error);
  CHECK_THROWS_AS(split(ds, -0.1, 0.5, 1), Error);
}

TEST_CASE("random graphs have distinct pairs and honor the edge budget") {
  RawDataset ds = synth_graph(20, 15, 250, 0.7, 3);
  CHECK(ds.edges.size() == 250);
  CHECK(pair_set(ds.edges).size() == 250);
  index_t pos = 0;
  for (const SignedEdge& e : ds.edges) pos += e.sign == Sign::Positive ? 1 : 0;
  // 250 draws at p = 0.7: a 5-sigma band around the mean.
  CHECK(pos > 138);
  CHECK(pos < 212);

  // Dense regime: every pair requested.
  RawDataset full = synth_graph(6, 5, 30, 0.5, 8);
  CHECK(pair_set(full.edges).size() == 30);

  CHECK_THROWS_AS(synth_graph(6, 5, 31, 0.5, 8), Error);
}

TEST_CASE("planted graphs deliver exact shape and sign counts") {
  PlantedConfig cfg;
  cfg.n_u = 30;
  cfg.n_v = 25;
  cfg.m = 200;
  cfg.pos_count = 140;
  cfg.flip_prob = 0.15;
  cfg.seed = 6;
  RawDataset ds = synth_planted(cfg);
  CHECK(ds.n_u() == 30);  // every node gets an id, isolated ones included
  CHECK(ds.n_v() == 25);
  CHECK(ds.edges.size() == 200);
  CHECK(pair_set(ds.edges).size() == 200);
  index_t pos = 0;
  for (const SignedEdge& e : ds.edges) pos += e.sign == Sign::Positive ? 1 : 0;
  CHECK(pos == 140);

  // Same seed, same graph; different seed, different labels somewhere.
  RawDataset again = synth_planted(cfg);
  REQUIRE(again.edges.size() == ds.edges.size());
  bool same = true;
  for (std::size_t i = 0; i < ds.edges.size(); ++i)
    same = same && ds.edges[i].u == again.edges[i].u &&
           ds.edges[i].v == again.edges[i].v && ds.edges[i].sign == again.edges[i].sign;
  CHECK(same);
  cfg.seed = 7;
  RawDataset other = synth_planted(cfg);
  bool differs = false;
  for (std::size_t i = 0; !differs && i < ds.edges.size(); ++i)
    differs = ds.edges[i].u != other.edges[i].u || ds.edges[i].v != other.edges[i].v ||
              ds.edges[i].sign != other.edges[i].sign;
  CHECK(differs);
}

TEST_CASE("presets mirror the benchmark shapes") {
  struct Expected {
    const char* name;
    index_t n_u, n_v, m, pos;
  };
  const Expected rows[] = {
      {"review", 182, 304, 1170, 464},
      {"bonanza", 7919, 1973, 36543, 35805},
      {"ml1m", 6040, 3706, 1000209, 836478},
      {"amazon-dm", 11796, 16565, 169781, 165777},
  };
  for (const Expected& row : rows) {
    auto cfg = find_preset(row.name);
    REQUIRE(cfg.has_value());
    CHECK(cfg->n_u == row.n_u);
    CHECK(cfg->n_v == row.n_v);
    CHECK(cfg->m == row.m);
    CHECK(cfg->pos_count == row.pos);
  }
  CHECK_FALSE(find_preset("unknown").has_value());
  CHECK(planted_presets().size() == 4);

  // Generate the two small presets end to end and verify the counts land.
  for (const char* name : {"review", "bonanza"}) {
    RawDataset ds = synth_planted(*find_preset(name));
    auto cfg = find_preset(name);
    CHECK(ds.edges.size() == static_cast<std::size_t>(cfg->m));
    index_t pos = 0;
    for (const SignedEdge& e : ds.edges) pos += e.sign == Sign::Positive ? 1 : 0;
    CHECK(pos == cfg->pos_count);
    CHECK(ds.n_u() == cfg->n_u);
    CHECK(ds.n_v() == cfg->n_v);
  }
}
