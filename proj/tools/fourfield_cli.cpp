// Command-line driver: manufactured-solution convergence studies, the
// 96-combination stability scan, and FR/alpha reports.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fourfield/study.hpp"

namespace {

using namespace fourfield;

std::vector<ElementQuartet> resolve_quartets(const std::vector<std::string>& names) {
  std::vector<ElementQuartet> out;
  for (const auto& n : names) {
    if (n == "all") {
      auto all = ElementQuartet::all();
      out.insert(out.end(), all.begin(), all.end());
    } else {
      out.push_back(ElementQuartet::parse(n));
    }
  }
  return out;
}

std::vector<int> default_levels(const std::string& cmd, int dim) {
  if (cmd == "convergence") return dim == 2 ? std::vector<int>{4, 8, 16} : std::vector<int>{2, 3, 4};
  return dim == 2 ? std::vector<int>{2, 4} : std::vector<int>{1, 2};
}

template <int Dim>
bool quartet_is_stable(const ElementQuartet& q) {
  ScanOptions opt;
  auto verdicts = scan_combinations<Dim>(Dim == 2 ? std::vector<int>{2, 4} : std::vector<int>{1, 2},
                                         {q}, opt);
  return verdicts.at(0).stable;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file: " + path);
  os << content;
}

template <int Dim>
int run_convergence_cmd(const StudyConfig& cfg, const std::string& dump_mesh) {
  if (!dump_mesh.empty()) {
    for (int n : cfg.levels) {
      auto mesh = study_mesh<Dim>(n, cfg.boundary_split);
      write_file(dump_mesh + "." + std::to_string(n) + ".json", mesh_to_json(mesh).dump(2) + "\n");
    }
  }
  std::vector<ConvergenceRow> rows;
  for (const auto& q : resolve_quartets(cfg.quartets)) {
    if (!cfg.force && !quartet_is_stable<Dim>(q)) {
      std::cerr << q.name() << ": unstable combination; rerun with --force to study it anyway\n";
      return 2;
    }
    auto r = run_convergence<Dim>(q, cfg.levels, cfg.mu, cfg.tol, cfg.maxit, cfg.boundary_split);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::ostringstream os;
  write_convergence_csv(os, rows);
  if (cfg.out.empty())
    std::cout << os.str();
  else
    write_file(cfg.out, os.str());
  return 0;
}

template <int Dim>
int run_scan_cmd(const StudyConfig& cfg) {
  ScanOptions opt;
  opt.mu = cfg.mu;
  nlohmann::ordered_json j = run_scan<Dim>(cfg.levels, opt);
  std::string text = j.dump(2) + "\n";
  if (cfg.out.empty())
    std::cout << text;
  else
    write_file(cfg.out, text);
  std::cerr << "stable combinations in " << Dim << "D: " << j["summary"]["stable_count"] << "\n";
  return 0;
}

template <int Dim>
int run_infsup_cmd(const StudyConfig& cfg) {
  ScanOptions opt;
  opt.mu = cfg.mu;
  auto rows = run_infsup_report<Dim>(resolve_quartets(cfg.quartets), cfg.levels, opt);
  std::ostringstream os;
  write_infsup_csv(os, rows);
  if (cfg.out.empty())
    std::cout << os.str();
  else
    write_file(cfg.out, os.str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"four-field mixed finite elements for incompressible nonlinear elasticity"};
  app.require_subcommand(1);
  app.set_config("--config")->description("flat key=value config file; flags override");
  app.allow_config_extras(false);

  fourfield::StudyConfig cfg;
  app.add_option("--dim", cfg.dim, "spatial dimension")->check(CLI::IsMember({2, 3}));
  app.add_option("--quartet", cfg.quartets, "quartet name(s) like L1N11R2D0, or 'all'");
  app.add_option("--levels", cfg.levels, "comma-separated structured mesh levels, e.g. 4,8,16")
      ->delimiter(',');
  app.add_option("--mu", cfg.mu, "shear modulus");
  app.add_option("--tol", cfg.tol, "Newton tolerance");
  app.add_option("--maxit", cfg.maxit, "Newton iteration cap");
  app.add_option("--split", cfg.boundary_split, "boundary split: y0 or dirichlet")
      ->check(CLI::IsMember({"y0", "dirichlet"}));
  app.add_option("--out", cfg.out, "output path (stdout when omitted)");
  app.add_flag("--force", cfg.force, "run unstable quartets anyway");
  std::string dump_mesh;
  app.add_option("--dump-mesh", dump_mesh, "also write the study meshes as <path>.<level>.json");

  auto* conv = app.add_subcommand("convergence", "manufactured-solution errors and rates (CSV)");
  auto* scan = app.add_subcommand("stability-scan", "scan all 96 quartets (JSON verdicts)");
  auto* infsup = app.add_subcommand("infsup-report", "FR and alpha versus h (CSV)");
  for (auto* sc : {conv, scan, infsup}) sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    std::string cmd = conv->parsed() ? "convergence" : (scan->parsed() ? "stability-scan" : "infsup-report");
    if (cfg.levels.empty()) cfg.levels = default_levels(cmd, cfg.dim);

    if (cmd == "convergence")
      return cfg.dim == 2 ? run_convergence_cmd<2>(cfg, dump_mesh) : run_convergence_cmd<3>(cfg, dump_mesh);
    if (cmd == "stability-scan")
      return cfg.dim == 2 ? run_scan_cmd<2>(cfg) : run_scan_cmd<3>(cfg);
    return cfg.dim == 2 ? run_infsup_cmd<2>(cfg) : run_infsup_cmd<3>(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
