// erpcw command-line driver: config-driven runs writing one output directory each.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "erpcw/commands.hpp"

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream os(p);
  if (!os) throw erpcw::InvalidArgument("cannot write " + p.string());
  os << std::setw(2) << j << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Erbium photonic-crystal waveguide emitter toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "erpcw-out";
  std::uint64_t seed = 1;
  int jobs = 1;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override a key: section.key=value (repeatable)");
  app.add_option("-o,--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_flag("-q,--quiet", quiet, "Suppress summary lines");

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"bands", "TE band structure of the unit cell or W1 supercell"},
      {"ldos", "FDTD local density of states in a finite W1 device"},
      {"lifetime", "Modified lifetime and branching for given Purcell factors"},
      {"ensemble", "Lifetime and branching statistics of a random emitter ensemble"},
      {"zeeman", "Lifetime against Zeeman-tuned transition frequency"},
      {"synth", "Synthetic resonant-fluorescence spectra and time tags"},
      {"analyze", "Peak, lifetime, g2 and branching analysis of measured or synthetic data"},
      {"ng", "Group index from Fabry-Perot resonances with reciprocal fit"},
      {"budget", "Detection-efficiency bound and filtering hypothesis test"}};
  for (const auto& [name, help] : verbs) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    erpcw::RunConfig cfg = config_path.empty() ? erpcw::RunConfig{} : erpcw::RunConfig::from_file(config_path);
    for (const auto& s : sets) cfg.set(s);
    erpcw::RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.seed = seed;
    ctx.jobs = jobs;
    ctx.log = quiet ? nullptr : &std::cout;
    std::filesystem::create_directories(ctx.out_dir);

    const nlohmann::json report = erpcw::command_table().at(verb)(cfg, ctx);
    write_json(ctx.out_dir / "report.json", report);

    nlohmann::json prov;
    prov["tool"] = "erpcw";
    prov["version"] = erpcw::kToolVersion;
    prov["command"] = verb;
    prov["config_file"] = config_path;
    prov["overrides"] = sets;
    prov["config"] = cfg.echo();
    prov["config_hash"] = erpcw::hex64(erpcw::fnv1a(cfg.echo().dump()));
    prov["seed"] = seed;
    prov["jobs"] = jobs;
    prov["timestamp"] = utc_now();
    write_json(ctx.out_dir / "provenance.json", prov);
    return 0;
  } catch (const erpcw::InvalidArgument& e) {
    std::cerr << "erpcw " << verb << ": invalid input: " << e.what() << '\n';
    return 2;
  } catch (const erpcw::ResourceError& e) {
    std::cerr << "erpcw " << verb << ": resource limit: " << e.what() << '\n';
    return 2;
  } catch (const erpcw::NumericalError& e) {
    std::cerr << "erpcw " << verb << ": numerical failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "erpcw " << verb << ": " << e.what() << '\n';
    return 2;
  }
}
