#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/rng.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

// Fit nodes into a fixed-capacity graph. Up to `capacity` nodes are kept in
// input order; any excess is resolved by seeded uniform sampling without
// replacement (relative order preserved). Remaining slots become virtual
// padding: VOID class, origin position, zero members. A size-weighted
// sampling mode (selection probability proportional to member_count) is
// available but off by default.
inline SemanticGraph build_graph(const std::vector<InstanceNode>& nodes, int capacity,
                                 uint64_t rng_seed, Modality modality,
                                 bool size_weighted = false) {
  if (capacity < 1) throw ConfigError("graph capacity must be >= 1");
  SemanticGraph graph;
  graph.capacity = capacity;
  graph.modality = modality;

  const int n = static_cast<int>(nodes.size());
  std::vector<int> kept;
  if (n <= capacity) {
    kept.resize(n);
    std::iota(kept.begin(), kept.end(), 0);
  } else if (!size_weighted) {
    Rng rng(rng_seed);
    kept = sample_without_replacement(n, capacity, rng);
  } else {
    Rng rng(rng_seed);
    std::vector<double> weight(n);
    for (int i = 0; i < n; ++i) weight[i] = std::max(1, nodes[i].member_count);
    std::vector<bool> taken(n, false);
    for (int pick = 0; pick < capacity; ++pick) {
      double total = 0;
      for (int i = 0; i < n; ++i) {
        if (!taken[i]) total += weight[i];
      }
      double ticket = rng.next_unit() * total;
      int chosen = -1;
      for (int i = 0; i < n; ++i) {
        if (taken[i]) continue;
        ticket -= weight[i];
        chosen = i;
        if (ticket <= 0) break;
      }
      taken[chosen] = true;
    }
    for (int i = 0; i < n; ++i) {
      if (taken[i]) kept.push_back(i);
    }
  }

  graph.real_count = static_cast<int>(kept.size());
  graph.nodes.reserve(capacity);
  for (int idx : kept) {
    InstanceNode node = nodes[idx];
    node.is_virtual = false;
    graph.nodes.push_back(node);
  }
  while (static_cast<int>(graph.nodes.size()) < capacity) {
    InstanceNode pad;
    pad.class_id = kVoidClass;
    pad.position.setZero();
    pad.member_count = 0;
    pad.is_virtual = true;
    graph.nodes.push_back(pad);
  }
  graph.validate();
  return graph;
}

// ---- serialization ------------------------------------------------------------
// Versioned little-endian record; used by the CLI and dataset caching.

namespace detail {

constexpr char kGraphMagic[8] = {'S', 'G', 'M', 'G', 'R', 'P', 'H', '1'};
constexpr uint32_t kGraphVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* field) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError(std::string("graph record truncated at ") + field);
  return v;
}

}  // namespace detail

inline void save_graph(std::ostream& out, const SemanticGraph& graph) {
  out.write(detail::kGraphMagic, sizeof(detail::kGraphMagic));
  detail::write_pod(out, detail::kGraphVersion);
  detail::write_pod(out, static_cast<uint8_t>(graph.modality));
  detail::write_pod(out, static_cast<uint32_t>(graph.capacity));
  detail::write_pod(out, static_cast<uint32_t>(graph.real_count));
  for (const auto& node : graph.nodes) {
    detail::write_pod(out, static_cast<int32_t>(node.class_id));
    detail::write_pod(out, node.position.x());
    detail::write_pod(out, node.position.y());
    detail::write_pod(out, node.position.z());
    detail::write_pod(out, static_cast<uint32_t>(node.member_count));
    detail::write_pod(out, static_cast<uint8_t>(node.is_virtual ? 1 : 0));
  }
}

inline SemanticGraph load_graph(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kGraphMagic, sizeof(magic)) != 0) {
    throw ParseError("not a graph record (bad magic)");
  }
  const auto version = detail::read_pod<uint32_t>(in, "version");
  if (version != detail::kGraphVersion) {
    throw ParseError("unsupported graph record version " + std::to_string(version));
  }
  SemanticGraph graph;
  graph.modality = static_cast<Modality>(detail::read_pod<uint8_t>(in, "modality"));
  graph.capacity = static_cast<int>(detail::read_pod<uint32_t>(in, "capacity"));
  graph.real_count = static_cast<int>(detail::read_pod<uint32_t>(in, "real_count"));
  for (int i = 0; i < graph.capacity; ++i) {
    InstanceNode node;
    node.class_id = detail::read_pod<int32_t>(in, "class_id");
    node.position.x() = detail::read_pod<double>(in, "position");
    node.position.y() = detail::read_pod<double>(in, "position");
    node.position.z() = detail::read_pod<double>(in, "position");
    node.member_count = static_cast<int>(detail::read_pod<uint32_t>(in, "member_count"));
    node.is_virtual = detail::read_pod<uint8_t>(in, "is_virtual") != 0;
    graph.nodes.push_back(node);
  }
  graph.validate();
  return graph;
}

inline void save_graph_file(const std::filesystem::path& path, const SemanticGraph& graph) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  save_graph(out, graph);
}

inline SemanticGraph load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_graph(in);
}

}  // namespace sgm
