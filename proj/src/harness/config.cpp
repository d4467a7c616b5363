#include "plasticity/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "plasticity/errors.hpp"
#include "plasticity/ppo/trainer.hpp"

namespace plasticity::harness {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = boost::trim_copy(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config: cannot parse '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string s = boost::to_lower_copy(boost::trim_copy(text));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: cannot parse '" + text + "' as a boolean for " + key);
}

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

// One accessor per key: getter renders the value, setter parses it.
struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
};

template <typename T>
Field int_field(T ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<T>(k, v);
          }};
}

template <typename Sub, typename T>
Field sub_field(Sub ExperimentConfig::*sub, T Sub::*member) {
  return {[sub, member](const ExperimentConfig& c) {
            const T& v = c.*sub.*member;
            if constexpr (std::is_same_v<T, bool>) {
              return fmt_bool(v);
            } else if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(v);
            } else {
              return std::to_string(v);
            }
          },
          [sub, member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*sub.*member = parse_bool(k, v);
            } else {
              c.*sub.*member = parse_number<T>(k, v);
            }
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  using P = ppo::PpoConfig;
  using E = env::EnvParams;
  using I = interventions::InterventionConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"experiment.protocol",
       {[](const C& c) { return shift::to_string(c.protocol); },
        [](C& c, const std::string&, const std::string& v) { c.protocol = shift::parse_protocol(boost::trim_copy(v)); }}},
      {"experiment.methods",
       {[](const C& c) { return boost::join(c.methods, ", "); },
        [](C& c, const std::string&, const std::string& v) { c.methods = parse_list(v); }}},
      {"experiment.n_rounds", int_field(&C::n_rounds)},
      {"experiment.k", int_field(&C::k)},
      {"experiment.iterations_per_round", int_field(&C::iterations_per_round)},
      {"experiment.n_seeds", int_field(&C::n_seeds)},
      {"experiment.n_test", int_field(&C::n_test)},
      {"experiment.test_episodes", int_field(&C::test_episodes)},
      {"experiment.test_eval_every", int_field(&C::test_eval_every)},
      {"experiment.eval_batch", int_field(&C::eval_batch)},
      {"experiment.reward_window", int_field(&C::reward_window)},
      {"experiment.master_seed", int_field(&C::master_seed)},
      {"experiment.output_dir",
       {[](const C& c) { return c.output_dir; },
        [](C& c, const std::string&, const std::string& v) { c.output_dir = boost::trim_copy(v); }}},
      {"ppo.gamma", sub_field(&C::ppo, &P::gamma)},
      {"ppo.lambda", sub_field(&C::ppo, &P::lambda)},
      {"ppo.clip_epsilon", sub_field(&C::ppo, &P::clip_epsilon)},
      {"ppo.entropy_coef", sub_field(&C::ppo, &P::entropy_coef)},
      {"ppo.value_coef", sub_field(&C::ppo, &P::value_coef)},
      {"ppo.learning_rate", sub_field(&C::ppo, &P::learning_rate)},
      {"ppo.minibatch_size", sub_field(&C::ppo, &P::minibatch_size)},
      {"ppo.update_epochs", sub_field(&C::ppo, &P::update_epochs)},
      {"ppo.buffer_size", sub_field(&C::ppo, &P::buffer_size)},
      {"ppo.n_workers", sub_field(&C::ppo, &P::n_workers)},
      {"ppo.normalize_advantages", sub_field(&C::ppo, &P::normalize_advantages)},
      {"ppo.max_grad_norm", sub_field(&C::ppo, &P::max_grad_norm)},
      {"network.hidden_dims",
       {[](const C& c) {
          std::vector<std::string> parts;
          for (auto h : c.network.hidden_dims) parts.push_back(std::to_string(h));
          return boost::join(parts, ", ");
        },
        [](C& c, const std::string& k, const std::string& v) {
          c.network.hidden_dims.clear();
          for (const auto& p : parse_list(v)) c.network.hidden_dims.push_back(parse_number<Index>(k, p));
        }}},
      {"network.activation",
       {[](const C& c) { return std::string(c.network.activation == nn::Activation::Crelu ? "crelu" : "relu"); },
        [](C& c, const std::string& k, const std::string& v) {
          const auto s = boost::to_lower_copy(boost::trim_copy(v));
          if (s == "relu") {
            c.network.activation = nn::Activation::Relu;
          } else if (s == "crelu") {
            c.network.activation = nn::Activation::Crelu;
          } else {
            throw ConfigError("config: " + k + " must be relu or crelu, got '" + v + "'");
          }
        }}},
      {"network.layer_norm",
       {[](const C& c) { return fmt_bool(c.network.use_layer_norm); },
        [](C& c, const std::string& k, const std::string& v) { c.network.use_layer_norm = parse_bool(k, v); }}},
      {"env.n_blue", sub_field(&C::env, &E::n_blue)},
      {"env.n_red", sub_field(&C::env, &E::n_red)},
      {"env.wall_density", sub_field(&C::env, &E::wall_density)},
      {"env.episode_length", sub_field(&C::env, &E::episode_length)},
      {"env.end_when_blue_collected", sub_field(&C::env, &E::end_when_blue_collected)},
      {"interventions.shrink_perturb_beta", sub_field(&C::intervention, &I::shrink_perturb_beta)},
      {"interventions.soft_shrink_perturb_beta", sub_field(&C::intervention, &I::soft_shrink_perturb_beta)},
      {"interventions.l2_alpha", sub_field(&C::intervention, &I::l2_alpha)},
      {"interventions.regen_alpha", sub_field(&C::intervention, &I::regen_alpha)},
      {"interventions.redo_period", sub_field(&C::intervention, &I::redo_period)},
      {"interventions.redo_tau", sub_field(&C::intervention, &I::redo_tau)},
      {"interventions.squared_penalty", sub_field(&C::intervention, &I::squared_penalty)},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_rounds < 1) throw ConfigError("experiment.n_rounds must be >= 1");
  if (k < 1) throw ConfigError("experiment.k must be >= 1");
  if (iterations_per_round < 1) throw ConfigError("experiment.iterations_per_round must be >= 1");
  if (n_seeds < 1) throw ConfigError("experiment.n_seeds must be >= 1");
  if (n_test < 1) throw ConfigError("experiment.n_test must be >= 1");
  if (test_episodes < 1) throw ConfigError("experiment.test_episodes must be >= 1");
  if (test_eval_every < 0) throw ConfigError("experiment.test_eval_every must be >= 0");
  if (eval_batch < 1) throw ConfigError("experiment.eval_batch must be >= 1");
  if (reward_window < 1) throw ConfigError("experiment.reward_window must be >= 1");
  if (output_dir.empty()) throw ConfigError("experiment.output_dir must not be empty");
  if (methods.empty()) throw ConfigError("experiment.methods must list at least one method");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    const auto ic = method(m);
    ic.validate();
    if (!seen.insert(ic.label()).second) throw ConfigError("experiment.methods lists '" + m + "' twice");
  }
  ppo.validate();
  if (ppo::PpoTrainer::epochs_per_round(ppo, iterations_per_round) < 1) {
    throw ConfigError("experiment.iterations_per_round too small to fill one buffer (need iterations * n_workers >= " +
                      std::to_string(ppo.buffer_size) + ")");
  }
  network.validate();
  if (env.n_blue < 0 || env.n_red < 0) throw ConfigError("env jewel counts must be >= 0");
  if (!(env.wall_density >= 0.0 && env.wall_density < 1.0)) throw ConfigError("env.wall_density must be in [0, 1)");
  if (env.episode_length < 1) throw ConfigError("env.episode_length must be >= 1");
}

interventions::InterventionConfig ExperimentConfig::method(const std::string& label) const {
  auto parsed = interventions::InterventionConfig::from_label(label);
  auto out = intervention;
  out.kind = parsed.kind;
  out.layer_norm = parsed.layer_norm;
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(*this));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) config.set(section + "." + key, value.data());
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, value] : config.entries()) {
    const auto dot = key.find('.');
    const auto sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_config(config);
  if (!out) throw IoError("cannot write " + path.string());
}

std::uint64_t derive_seed(std::uint64_t master_seed, int seed_index, Stream purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(seed_index), static_cast<std::uint32_t>(purpose)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace plasticity::harness
