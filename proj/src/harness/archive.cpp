#include "plasticity/harness/archive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "plasticity/errors.hpp"

namespace plasticity::harness {

using ordered_json = nlohmann::ordered_json;

std::string metrics_line(const diagnostics::MetricsRecord& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["round"] = r.round;
  j["train_reward"] = r.train_reward;
  j["test_reward"] = r.test_reward ? ordered_json(*r.test_reward) : ordered_json(nullptr);
  j["entropy"] = r.entropy;
  j["weight_mag"] = r.weight_mag;
  j["weight_diff"] = r.weight_diff;
  j["grad_norm"] = r.grad_norm;
  j["dead_unit_fraction"] = r.dead_unit_fraction;
  j["episode_returns"] = r.episode_returns;
  return j.dump();
}

diagnostics::MetricsRecord parse_metrics_line(const std::string& line) {
  try {
    const auto j = ordered_json::parse(line);
    diagnostics::MetricsRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.round = j.at("round").get<int>();
    r.train_reward = j.at("train_reward").get<double>();
    if (!j.at("test_reward").is_null()) r.test_reward = j.at("test_reward").get<double>();
    r.entropy = j.at("entropy").get<double>();
    r.weight_mag = j.at("weight_mag").get<double>();
    r.weight_diff = j.at("weight_diff").get<double>();
    r.grad_norm = j.at("grad_norm").get<double>();
    r.dead_unit_fraction = j.at("dead_unit_fraction").get<double>();
    r.episode_returns = j.at("episode_returns").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed metrics record: ") + e.what());
  }
}

std::string event_line(const interventions::InterventionEvent& e) {
  ordered_json j;
  j["epoch"] = e.epoch;
  j["round"] = e.round;
  j["kind"] = e.kind;
  j["params_touched"] = e.params_touched;
  return j.dump();
}

interventions::InterventionEvent parse_event_line(const std::string& line) {
  try {
    const auto j = ordered_json::parse(line);
    interventions::InterventionEvent e;
    e.epoch = j.at("epoch").get<int>();
    e.round = j.at("round").get<int>();
    e.kind = j.at("kind").get<std::string>();
    e.params_touched = j.at("params_touched").get<Index>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("malformed event record: ") + ex.what());
  }
}

LineWriter::LineWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void LineWriter::write(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

template <typename T, typename Parse>
std::vector<T> read_lines(const fs::path& path, Parse parse) {
  std::vector<T> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse(line));
  }
  return out;
}

bool is_method_dir(const fs::path& dir) { return fs::is_regular_file(dir / "config.snapshot"); }

}  // namespace

MethodArchive load_archive(const fs::path& dir) {
  if (!is_method_dir(dir)) throw IoError("not an archive (no config.snapshot): " + dir.string());
  MethodArchive a;
  a.dir = dir;
  try {
    a.config = parse_config(read_file(dir / "config.snapshot"));
  } catch (const ConfigError& e) {
    throw IoError("bad config.snapshot in " + dir.string() + ": " + e.what());
  }
  a.label = a.config.method(a.config.methods.front()).label();
  for (int i = 0; i < a.config.n_seeds; ++i) {
    const fs::path sd = dir / ("seed_" + std::to_string(i));
    if (!fs::is_directory(sd)) continue;
    SeedArchive s;
    s.seed = i;
    s.records = read_lines<diagnostics::MetricsRecord>(sd / "metrics.ldj", parse_metrics_line);
    s.events = read_lines<interventions::InterventionEvent>(sd / "events.ldj", parse_event_line);
    a.seeds.push_back(std::move(s));
  }
  return a;
}

std::vector<MethodArchive> load_archives(const std::vector<fs::path>& paths) {
  std::vector<MethodArchive> out;
  for (const auto& p : paths) {
    if (!fs::is_directory(p)) throw IoError("archive path is not a directory: " + p.string());
    if (is_method_dir(p)) {
      out.push_back(load_archive(p));
      continue;
    }
    std::vector<fs::path> dirs;
    if (fs::is_regular_file(p / "run.snapshot")) {
      const auto run = parse_config(read_file(p / "run.snapshot"));
      for (const auto& m : run.methods) {
        const auto d = p / run.method(m).label();
        if (is_method_dir(d)) dirs.push_back(d);
      }
    } else {
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_directory() && is_method_dir(entry.path())) dirs.push_back(entry.path());
      }
      std::sort(dirs.begin(), dirs.end());
    }
    if (dirs.empty()) throw IoError("no archives found under " + p.string());
    for (const auto& d : dirs) out.push_back(load_archive(d));
  }
  return out;
}

}  // namespace plasticity::harness
