#pragma once

// File formats shared by the simulator, the trainer and the evaluator.
//
//   trajectories  one JSON object per line: {"user": "...", "events": [0, 4, ...]}
//   sidecar       {"d": int, "labels": [...], "items": {"item": variable, ...}}
//   edge list     TSV "parent<TAB>child", one edge per line, with a header row

#include <filesystem>
#include <iosfwd>

#include "causalrec/graph.hpp"

namespace causalrec {

void write_trajectories(std::ostream& out, const TrajectoryDataset& dataset);
void write_sidecar(std::ostream& out, const VariableSpace& space);

VariableSpace read_sidecar(std::istream& in);
/// Events are validated against `space`; malformed lines raise InputError
/// quoting the line number.
std::vector<Trajectory> read_trajectories(std::istream& in, const VariableSpace& space);

void save_dataset(const std::filesystem::path& trajectories_path,
                  const std::filesystem::path& sidecar_path,
                  const TrajectoryDataset& dataset);
TrajectoryDataset load_dataset(const std::filesystem::path& trajectories_path,
                               const std::filesystem::path& sidecar_path);

/// Conventional sidecar location next to a trajectory file: "<stem>.meta.json".
std::filesystem::path sidecar_path_for(const std::filesystem::path& trajectories_path);

void write_edge_list(std::ostream& out, const CausalGraph& graph);
CausalGraph read_edge_list(std::istream& in, int d);
void save_edge_list(const std::filesystem::path& path, const CausalGraph& graph);
CausalGraph load_edge_list(const std::filesystem::path& path, int d);

}  // namespace causalrec
