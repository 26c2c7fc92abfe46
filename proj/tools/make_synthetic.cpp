// SPDX-License-Identifier: Apache-2.0
//
// gnl-synth: write a driver/follower diffusion series and its true edge list.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>

#include "gnl/gnl.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate linear-diffusion data with known influence links"};
  std::size_t nodes = 6, drivers = 3, length = 300;
  std::uint64_t seed = 0;
  std::string data_path, edges_path;
  app.add_option("--nodes", nodes, "Number of nodes")->check(CLI::PositiveNumber);
  app.add_option("--drivers", drivers, "Number of driver nodes");
  app.add_option("--length", length, "Number of timestamps")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", data_path, "Output CSV")->required();
  app.add_option("--edges", edges_path, "Output edge list of the true links");
  CLI11_PARSE(app, argc, argv);

  try {
    auto spec = gnl::driver_follower_spec(nodes, drivers, seed);
    spec.length = length;
    const auto syn = gnl::make_diffusion_data(spec);
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw gnl::IoError("cannot write '" + data_path + "'");
    gnl::write_csv(out, syn.dataset);
    if (!edges_path.empty()) {
      std::ofstream edges(edges_path, std::ios::binary);
      if (!edges) throw gnl::IoError("cannot write '" + edges_path + "'");
      for (const auto& [j, i] : syn.truth.edges()) {
        edges << syn.dataset.node_ids[j] << ' ' << syn.dataset.node_ids[i] << '\n';
      }
    }
  } catch (const gnl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
