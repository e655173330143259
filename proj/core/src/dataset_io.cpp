#include "causalrec/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "causalrec/error.hpp"
#include "json.hpp"

namespace causalrec {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_trajectories(std::ostream& out, const TrajectoryDataset& dataset) {
  for (const auto& t : dataset.trajectories) {
    nlohmann::ordered_json line = {{"user", t.user_id}, {"events", t.events}};
    out << line.dump() << '\n';
  }
}

void write_sidecar(std::ostream& out, const VariableSpace& space) {
  nlohmann::ordered_json items = nlohmann::ordered_json::object();
  for (const auto& [item, var] : space.items()) items[item] = var;
  nlohmann::ordered_json doc = {{"d", space.size()}, {"labels", space.labels()}, {"items", items}};
  out << doc.dump(2) << '\n';
}

VariableSpace read_sidecar(std::istream& in) {
  json doc;
  try {
    in >> doc;
    const int d = doc.at("d").get<int>();
    auto labels = doc.at("labels").get<std::vector<std::string>>();
    if (static_cast<int>(labels.size()) != d) {
      throw InputError("sidecar declares d=" + std::to_string(d) + " but lists " +
                       std::to_string(labels.size()) + " labels");
    }
    std::map<std::string, int> items;
    for (const auto& [item, var] : doc.at("items").items()) {
      items.emplace(item, var.get<int>());
    }
    return VariableSpace(std::move(labels), std::move(items));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed sidecar: ") + e.what());
  }
}

std::vector<Trajectory> read_trajectories(std::istream& in, const VariableSpace& space) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json doc = json::parse(line);
      Trajectory t;
      t.user_id = doc.at("user").get<std::string>();
      t.events = doc.at("events").get<std::vector<int>>();
      for (int e : t.events) {
        if (e < 0 || e >= space.size()) {
          throw InputError("event " + std::to_string(e) + " outside [0, " +
                           std::to_string(space.size()) + ")");
        }
      }
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& trajectories_path,
                  const std::filesystem::path& sidecar_path,
                  const TrajectoryDataset& dataset) {
  auto out = open_out(trajectories_path);
  write_trajectories(out, dataset);
  auto side = open_out(sidecar_path);
  write_sidecar(side, dataset.space);
  if (!out || !side) throw InputError("failed writing dataset files");
}

TrajectoryDataset load_dataset(const std::filesystem::path& trajectories_path,
                               const std::filesystem::path& sidecar_path) {
  auto side = open_in(sidecar_path);
  TrajectoryDataset ds;
  ds.space = read_sidecar(side);
  auto in = open_in(trajectories_path);
  ds.trajectories = read_trajectories(in, ds.space);
  return ds;
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& trajectories_path) {
  auto p = trajectories_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_edge_list(std::ostream& out, const CausalGraph& graph) {
  out << "parent\tchild\n";
  for (const auto& [parent, child] : graph.edges()) {
    out << parent << '\t' << child << '\n';
  }
}

CausalGraph read_edge_list(std::istream& in, int d) {
  CausalGraph g(d);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("parent", 0) == 0) continue;
    }
    std::istringstream fields(line);
    int parent = -1;
    int child = -1;
    if (!(fields >> parent >> child)) {
      throw InputError("malformed edge line '" + line + "'");
    }
    g.set_edge(parent, child);
  }
  return g;
}

void save_edge_list(const std::filesystem::path& path, const CausalGraph& graph) {
  auto out = open_out(path);
  write_edge_list(out, graph);
}

CausalGraph load_edge_list(const std::filesystem::path& path, int d) {
  auto in = open_in(path);
  return read_edge_list(in, d);
}

}  // namespace causalrec
