#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nsact/harness.hpp"

namespace nsact::harness {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::int64_t> parse_seed_list(const std::string& text) {
  std::vector<std::int64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw HarnessError("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw HarnessError("seed list is empty");
  return seeds;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !in.eof()) throw HarnessError("bad value for " + key + ": '" + text + "'");
  return v;
}

std::string resolve_path(const std::string& p, const fs::path& base) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal().string();
}

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : section) {
    if (!allowed.count(key)) throw HarnessError("unknown key '" + key + "' in section [" + name + "]");
  }
}

}  // namespace

BenchmarkConfig parse_benchmark_config(std::istream& in, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw HarnessError(std::string("config: ") + e.what());
  }

  BenchmarkConfig cfg;
  bool custom_models = false;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      throw HarnessError("config key '" + name + "' must be inside a section");
    }
    if (name == "benchmark") {
      check_keys(section, name, {"seeds", "epochs", "batch_size", "learning_rate", "precision"});
      if (auto v = section.get_optional<std::string>("seeds")) cfg.seeds = parse_seed_list(*v);
      if (auto v = section.get_optional<std::string>("epochs")) cfg.overrides.epochs = parse_number<std::size_t>("epochs", *v);
      if (auto v = section.get_optional<std::string>("batch_size")) {
        cfg.overrides.batch_size = parse_number<std::size_t>("batch_size", *v);
      }
      if (auto v = section.get_optional<std::string>("learning_rate")) {
        cfg.overrides.learning_rate = parse_number<double>("learning_rate", *v);
      }
      if (auto v = section.get_optional<std::string>("precision")) cfg.precision = parse_precision(trim(*v));
    } else if (name.rfind("dataset.", 0) == 0) {
      check_keys(section, name, {"path", "label", "name", "preparation", "specialist", "transfer", "transfer_source"});
      DatasetEntry d;
      d.id = name.substr(8);
      d.ref.path = resolve_path(section.get<std::string>("path", ""), base_dir);
      if (d.ref.path.empty()) throw HarnessError("section [" + name + "] needs a path");
      d.ref.label = section.get<std::string>("label", "last");
      d.ref.name = section.get<std::string>("name", d.id);
      d.ref.preparation = section.get<std::string>("preparation", "");
      d.specialist = resolve_path(section.get<std::string>("specialist", ""), base_dir);
      d.transfer = resolve_path(section.get<std::string>("transfer", ""), base_dir);
      d.transfer_source = section.get<std::string>("transfer_source", "");
      cfg.datasets.push_back(std::move(d));
    } else if (name.rfind("model.", 0) == 0) {
      check_keys(section, name, {"arch", "activation"});
      ModelEntry m;
      m.id = name.substr(6);
      try {
        m.arch = nn::parse_arch(section.get<std::string>("arch", "light"));
      } catch (const std::invalid_argument& e) {
        throw HarnessError("section [" + name + "]: " + e.what());
      }
      m.activation = section.get<std::string>("activation", "relu");
      static const std::set<std::string> kActivations{"relu", "gelu", "silu", "specialist", "transfer"};
      if (!kActivations.count(m.activation)) {
        throw HarnessError("section [" + name + "]: unknown activation '" + m.activation + "'");
      }
      cfg.models.push_back(std::move(m));
      custom_models = true;
    } else {
      throw HarnessError("unknown config section [" + name + "]");
    }
  }
  if (cfg.datasets.empty()) throw HarnessError("config lists no datasets");
  if (!custom_models) cfg.models = default_model_grid();
  return cfg;
}

BenchmarkConfig load_benchmark_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError("cannot open config " + path.string());
  return parse_benchmark_config(in, path.parent_path());
}

}  // namespace nsact::harness
