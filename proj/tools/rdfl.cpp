// rdfl: scenario runner and inspection tool.
#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "rdfl/cli/runner.hpp"
#include "rdfl/cli/verify.hpp"

namespace fs = std::filesystem;
using namespace rdfl;
using namespace rdfl::cli;

namespace {

struct Options {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned jobs = 1;
  std::size_t n_min = 2;
  std::size_t n_max = 16;
  std::uint64_t model_bytes = 1;
};

std::vector<Scenario> load_all(const Options& o) {
  if (o.configs.empty()) fail(ErrorCode::ConfigError, "no --config given");
  std::vector<Scenario> out;
  for (const auto& path : o.configs) {
    auto s = load_scenario(path);
    if (o.seed) s.seed = *o.seed;
    out.push_back(std::move(s));
  }
  return out;
}

/// One scenario writes to --out (a file) or its own `output`; several
/// scenarios treat --out as a directory and write <name>.csv into it.
std::optional<fs::path> output_for(const Scenario& s, const Options& o, std::size_t count) {
  if (o.out) {
    if (count == 1) return fs::path(*o.out);
    fs::create_directories(*o.out);
    return fs::path(*o.out) / (s.name + ".csv");
  }
  return s.output;
}

void run_one(const Scenario& s, const std::optional<fs::path>& path, std::mutex& console) {
  if (!path) {
    std::ostringstream buf;
    run_scenario(s, buf);
    std::lock_guard lock(console);
    std::cout << buf.str() << std::flush;
    return;
  }
  if (path->has_parent_path()) fs::create_directories(path->parent_path());
  std::ofstream file(*path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorCode::ConfigError, "cannot write '" + path->string() + "'");
  run_scenario(s, file);
  std::lock_guard lock(console);
  std::cerr << s.name << ": wrote " << path->string() << '\n';
}

int cmd_run(const Options& o) {
  const auto scenarios = load_all(o);
  std::mutex console;
  std::atomic<std::size_t> next{0};
  std::vector<int> status(scenarios.size(), kExitOk);
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        run_one(scenarios[i], output_for(scenarios[i], o, scenarios.size()), console);
      } catch (const Error& e) {
        std::lock_guard lock(console);
        std::cerr << scenarios[i].name << ": " << e.what() << '\n';
        status[i] = exit_code_for(e.code());
      } catch (const std::exception& e) {
        std::lock_guard lock(console);
        std::cerr << scenarios[i].name << ": " << e.what() << '\n';
        status[i] = kExitOther;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(scenarios.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (int s : status) {
    if (s != kExitOk) return s;
  }
  return kExitOk;
}

int cmd_topology(const Options& o) {
  for (const auto& s : load_all(o)) {
    if (o.configs.size() > 1) std::cout << "## " << s.name << '\n';
    print_topology(s, std::cout);
  }
  return kExitOk;
}

int cmd_bench(const Options& o) {
  std::ofstream file;
  if (o.out) file.open(*o.out);
  std::ostream& out = o.out ? static_cast<std::ostream&>(file) : std::cout;
  return bench_comm(o.n_min, o.n_max, o.model_bytes, o.seed.value_or(0), out) ? kExitOk : kExitVerification;
}

int cmd_verify() { return run_verify(std::cout) ? kExitOk : kExitVerification; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ring-topology decentralized federated learning simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.configs, "scenario file (repeatable)");
    if (needs_config) c->required();
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--out", o.out, "output file, or directory when several configs are given");
    sub->add_option("--jobs", o.jobs, "scenarios to run in parallel")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "train a scenario and write per-round metrics");
  add_common(run, true);
  auto* topo = app.add_subcommand("topology", "print ring entries and routing of untrusted nodes");
  add_common(topo, true);
  auto* bench = app.add_subcommand("bench-comm", "compare closed-form and simulated communication costs");
  add_common(bench, false);
  bench->add_option("--n-min", o.n_min, "smallest node count")->capture_default_str();
  bench->add_option("--n-max", o.n_max, "largest node count")->capture_default_str();
  bench->add_option("--model-bytes", o.model_bytes, "model size M in bytes")->capture_default_str();
  auto* verify = app.add_subcommand("verify", "run the property suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (topo->parsed()) return cmd_topology(o);
    if (bench->parsed()) return cmd_bench(o);
    if (verify->parsed()) return cmd_verify();
  } catch (const Error& e) {
    std::cerr << "rdfl: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rdfl: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
