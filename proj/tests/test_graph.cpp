#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "sgmatch/graph.hpp"
#include "sgmatch/rng.hpp"

using namespace sgm;

namespace {

std::vector<InstanceNode> make_nodes(int n, int cls = 1) {
  std::vector<InstanceNode> nodes(n);
  for (int i = 0; i < n; ++i) {
    nodes[i].position = Eigen::Vector3d(i, 0, 0);
    nodes[i].class_id = cls;
    nodes[i].member_count = 10 + i;
  }
  return nodes;
}

}  // namespace

TEST_CASE("exactly-full input passes through unchanged") {
  auto graph = build_graph(make_nodes(35), 35, 1, Modality::lidar);
  CHECK(graph.real_count == 35);
  for (int i = 0; i < 35; ++i) {
    CHECK(!graph.nodes[i].is_virtual);
    CHECK(graph.nodes[i].position.x() == i);
  }
}

TEST_CASE("short input gets virtual padding") {
  auto graph = build_graph(make_nodes(10), 35, 1, Modality::image);
  CHECK(graph.real_count == 10);
  for (int i = 10; i < 35; ++i) {
    CHECK(graph.nodes[i].is_virtual);
    CHECK(graph.nodes[i].class_id == kVoidClass);
    CHECK(graph.nodes[i].position == Eigen::Vector3d::Zero());
    CHECK(graph.nodes[i].member_count == 0);
  }
}

TEST_CASE("oversized input is down-sampled deterministically, order preserved") {
  auto nodes = make_nodes(50);
  auto a = build_graph(nodes, 35, 99, Modality::lidar);
  auto b = build_graph(nodes, 35, 99, Modality::lidar);
  REQUIRE(a.real_count == 35);
  for (int i = 0; i < 35; ++i) {
    CHECK(a.nodes[i].position == b.nodes[i].position);
  }
  for (int i = 1; i < 35; ++i) {
    CHECK(a.nodes[i].position.x() > a.nodes[i - 1].position.x());  // input order kept
  }
  auto c = build_graph(nodes, 35, 100, Modality::lidar);
  bool differs = false;
  for (int i = 0; i < 35 && !differs; ++i) {
    differs = a.nodes[i].position.x() != c.nodes[i].position.x();
  }
  CHECK(differs);
}

TEST_CASE("rebuilding from the kept nodes is idempotent at or under capacity") {
  auto nodes = make_nodes(20);
  auto once = build_graph(nodes, 35, 5, Modality::lidar);
  std::vector<InstanceNode> kept(once.nodes.begin(), once.nodes.begin() + once.real_count);
  auto twice = build_graph(kept, 35, 5, Modality::lidar);
  REQUIRE(twice.real_count == once.real_count);
  for (int i = 0; i < once.capacity; ++i) {
    CHECK(once.nodes[i].position == twice.nodes[i].position);
    CHECK(once.nodes[i].is_virtual == twice.nodes[i].is_virtual);
  }
}

TEST_CASE("sampling inclusion frequency is uniform at capacity/n") {
  auto nodes = make_nodes(50);
  std::vector<int> hits(50, 0);
  const int trials = 10000;
  for (int seed = 0; seed < trials; ++seed) {
    auto graph = build_graph(nodes, 35, seed, Modality::lidar);
    for (int i = 0; i < graph.real_count; ++i) {
      hits[static_cast<int>(graph.nodes[i].position.x())]++;
    }
  }
  for (int i = 0; i < 50; ++i) {
    const double freq = static_cast<double>(hits[i]) / trials;
    CHECK(freq == Catch::Approx(0.70).margin(0.02));
  }
}

TEST_CASE("virtual slots carry no members") {
  auto graph = build_graph(make_nodes(3), 8, 1, Modality::lidar);
  int total = 0;
  for (const auto& n : graph.nodes) {
    if (n.is_virtual) CHECK(n.member_count == 0);
    total += n.member_count;
  }
  CHECK(total == 10 + 11 + 12);
}

TEST_CASE("size-weighted sampling favors big instances") {
  std::vector<InstanceNode> nodes = make_nodes(40);
  for (int i = 0; i < 40; ++i) nodes[i].member_count = i < 20 ? 1 : 1000;
  int heavy_kept = 0;
  for (int seed = 0; seed < 200; ++seed) {
    auto graph = build_graph(nodes, 20, seed, Modality::lidar, true);
    for (int i = 0; i < graph.real_count; ++i) {
      if (graph.nodes[i].member_count == 1000) ++heavy_kept;
    }
  }
  CHECK(heavy_kept > 200 * 20 * 0.8);  // heavy nodes dominate selections
}

TEST_CASE("capacity must be positive") {
  CHECK_THROWS_AS(build_graph({}, 0, 1, Modality::lidar), ConfigError);
}

TEST_CASE("graph serialization round trip") {
  auto graph = build_graph(make_nodes(10, 3), 16, 7, Modality::image);
  std::stringstream buffer;
  save_graph(buffer, graph);
  auto loaded = load_graph(buffer);
  CHECK(loaded.capacity == graph.capacity);
  CHECK(loaded.real_count == graph.real_count);
  CHECK(loaded.modality == graph.modality);
  for (int i = 0; i < graph.capacity; ++i) {
    CHECK(loaded.nodes[i].position == graph.nodes[i].position);
    CHECK(loaded.nodes[i].class_id == graph.nodes[i].class_id);
    CHECK(loaded.nodes[i].member_count == graph.nodes[i].member_count);
    CHECK(loaded.nodes[i].is_virtual == graph.nodes[i].is_virtual);
  }
}

TEST_CASE("corrupt graph records fail loudly") {
  auto graph = build_graph(make_nodes(4), 6, 1, Modality::lidar);
  std::stringstream buffer;
  save_graph(buffer, graph);
  const std::string bytes = buffer.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_graph(truncated), ParseError);

  std::string mangled = bytes;
  mangled[0] = 'X';
  std::stringstream bad_magic(mangled);
  CHECK_THROWS_AS(load_graph(bad_magic), ParseError);
}
