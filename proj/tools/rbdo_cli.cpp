#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "rbdo/runner.hpp"

namespace {

rbdo::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;
  return rbdo::ExperimentConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RBDO with stochastic emulators: batch runs, references, reports"};
  app.require_subcommand(1);

  std::string config_path, run_dir;
  bool with_grid = false;

  CLI::App* run = app.add_subcommand("run", "Execute every (method, N_ED, seed) cell of a sweep");
  run->add_option("config", config_path, "experiment config JSON")->required();

  CLI::App* ref = app.add_subcommand("reference", "Compute and cache the reference optimum");
  ref->add_option("config", config_path, "experiment config JSON")->required();

  CLI::App* rep = app.add_subcommand("report", "Aggregate run files into summary tables");
  rep->add_option("dir", run_dir, "directory holding run_*.json files")->required();
  rep->add_flag("--grid", with_grid, "also emit 20x20 quantile-surface grids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const rbdo::ExperimentConfig config = load_config(config_path);
      const rbdo::RunRecord record = rbdo::run_experiment(config);
      const int total = static_cast<int>(record.runs.size());
      std::printf("%d/%d runs succeeded; outputs in %s\n", total - record.n_failed, total,
                  config.output_dir.c_str());
      for (const auto& st : record.stats)
        std::printf("  %-8s N_ED=%-5d n=%-3d median cost %.6g  median eps_c %.3g\n",
                    st.method.c_str(), st.n_ed, st.n_ok, st.median_cost, st.median_eps);
      return record.n_failed < total ? 0 : 1;
    }
    if (ref->parsed()) {
      bool cached = false;
      const nlohmann::json doc = rbdo::compute_reference(load_config(config_path), &cached);
      std::printf("reference (%s%s): cost %.8g\n", doc.at("method").get<std::string>().c_str(),
                  cached ? ", cached" : "", doc.at("cost").get<double>());
      return 0;
    }
    rbdo::write_report(run_dir, with_grid);
    std::printf("report written to %s\n", run_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
