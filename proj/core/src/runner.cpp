#include "rbdo/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "rbdo/benchmarks.hpp"

namespace rbdo {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

double quartile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const size_t lo = size_t(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

int worker_count(size_t n_cells) {
  int n = int(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RBDO_WORKERS")) n = std::atoi(env);
  n = std::max(1, n);
  return int(std::min<size_t>(n, std::max<size_t>(n_cells, 1)));
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> allowed = {"problem",     "overrides", "methods",
                                                "n_ed",        "repetitions", "base_seed",
                                                "n_mc",        "reference_n_mc", "output_dir"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");

  ExperimentConfig c;
  c.problem_id = j.at("problem").get<std::string>();
  if (c.problem_id != "buckling" && c.problem_id != "corroded-beam" &&
      c.problem_id != "short-column")
    throw std::invalid_argument("config: unknown problem '" + c.problem_id + "'");
  if (j.contains("overrides")) c.overrides = j["overrides"];
  c.methods = j.at("methods").get<std::vector<std::string>>();
  for (const auto& m : c.methods)
    if (m != "glam" && m != "spce" && m != "kriging" && m != "reference")
      throw std::invalid_argument("config: unknown method '" + m + "'");
  c.n_ed = j.at("n_ed").get<std::vector<int>>();
  for (int n : c.n_ed)
    if (n < 20) throw std::invalid_argument("config: n_ed values must be >= 20");
  c.repetitions = j.value("repetitions", 1);
  if (c.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
  c.base_seed = j.value("base_seed", std::uint64_t(0));
  c.n_mc = j.value("n_mc", 100000);
  c.reference_n_mc = j.value("reference_n_mc", 1000000LL);
  c.output_dir = j.value("output_dir", std::string("."));
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"problem", problem_id}, {"overrides", overrides},   {"methods", methods},
          {"n_ed", n_ed},          {"repetitions", repetitions}, {"base_seed", base_seed},
          {"n_mc", n_mc},          {"reference_n_mc", reference_n_mc},
          {"output_dir", output_dir}};
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string s = to_json().dump();
  return fnv1a(s.data(), s.size());
}

std::uint64_t run_seed(std::uint64_t base, const std::string& method, int n_ed, int repetition) {
  const std::string tag = method + "|" + std::to_string(n_ed) + "|" + std::to_string(repetition);
  return base ^ fnv1a(tag.data(), tag.size());
}

nlohmann::json compute_reference(const ExperimentConfig& config, bool* from_cache) {
  RbdoProblem p = make_problem(config.problem_id, config.overrides);
  fs::create_directories(config.output_dir);
  char name[64];
  std::snprintf(name, sizeof name, "reference_%016llx.json",
                static_cast<unsigned long long>(p.hash()));
  const fs::path path = fs::path(config.output_dir) / name;
  if (fs::exists(path)) {
    if (from_cache) *from_cache = true;
    return load_json(path);
  }
  if (from_cache) *from_cache = false;

  nlohmann::json doc;
  doc["format"] = "rbdo-reference";
  doc["version"] = 1;
  doc["problem"] = {{"id", config.problem_id}, {"overrides", config.overrides}};
  doc["problem_hash"] = p.hash();
  if (config.problem_id == "buckling") {
    BucklingSpec spec;
    if (config.overrides.contains("pf_target")) spec.pf_target = config.overrides["pf_target"];
    const Eigen::Vector2d d = buckling_analytical_optimum(spec, spec.pf_target);
    doc["method"] = "closed-form";
    doc["d_star"] = to_vec(d);
    doc["cost"] = p.cost(d);
    doc["converged"] = true;
  } else {
    const std::uint64_t seed = run_seed(config.base_seed, "reference", 0, 0);
    OptimizationResult r = reference_double_loop(p, int(config.reference_n_mc), seed);
    doc["method"] = "double-loop";
    doc["n_mc"] = config.reference_n_mc;
    doc["seed"] = seed;
    doc["d_star"] = to_vec(r.d_star);
    doc["cost"] = r.cost;
    doc["converged"] = r.converged;
  }
  write_text(path, doc.dump(2) + "\n");
  return doc;
}

RunRecord run_experiment(const ExperimentConfig& config) {
  const RbdoProblem problem = make_problem(config.problem_id, config.overrides);
  fs::create_directories(config.output_dir);

  double reference_cost = std::numeric_limits<double>::quiet_NaN();
  const bool want_reference =
      std::count(config.methods.begin(), config.methods.end(), "reference") > 0;
  {
    char name[64];
    std::snprintf(name, sizeof name, "reference_%016llx.json",
                  static_cast<unsigned long long>(problem.hash()));
    const fs::path ref_path = fs::path(config.output_dir) / name;
    if (want_reference || fs::exists(ref_path))
      reference_cost = compute_reference(config).at("cost").get<double>();
  }

  struct Cell {
    std::string method;
    int n_ed;
    int rep;
  };
  std::vector<Cell> cells;
  for (const auto& m : config.methods) {
    if (m == "reference") continue;
    for (int n : config.n_ed)
      for (int r = 0; r < config.repetitions; ++r) cells.push_back({m, n, r});
  }

  RunRecord record;
  record.config_hash = config.hash();
  record.runs.resize(cells.size());

  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      RunSummary& s = record.runs[i];
      s.method = cell.method;
      s.n_ed = cell.n_ed;
      s.repetition = cell.rep;
      s.seed = run_seed(config.base_seed, cell.method, cell.n_ed, cell.rep);

      nlohmann::json doc;
      doc["format"] = "rbdo-run";
      doc["version"] = 1;
      doc["problem"] = {{"id", config.problem_id}, {"overrides", config.overrides}};
      doc["method"] = cell.method;
      doc["n_ed"] = cell.n_ed;
      doc["repetition"] = cell.rep;
      doc["seed"] = s.seed;
      doc["n_mc"] = config.n_mc;
      try {
        SolveOptions opts;
        opts.n_mc = config.n_mc;
        SolveResult res = solve_rbdo(problem, emulator_kind_from_string(cell.method), cell.n_ed,
                                     s.seed, opts);
        s.ok = true;
        s.d_star = res.opt.d_star;
        s.cost = res.opt.cost;
        s.converged = res.opt.converged;
        s.trace_length = int(res.opt.trace.size());
        s.ed_seconds = res.ed_seconds;
        s.fit_seconds = res.fit_seconds;
        s.opt_seconds = res.opt_seconds;
        if (std::isfinite(reference_cost))
          s.eps_c = relative_cost_error(s.cost, reference_cost);
        doc["ok"] = true;
        doc["d_star"] = to_vec(s.d_star);
        doc["cost"] = s.cost;
        doc["eps_c"] = s.eps_c;
        doc["converged"] = s.converged;
        doc["iterations"] = res.opt.iterations;
        doc["trace_length"] = s.trace_length;
        doc["n_ed_realized"] = int(res.ed.responses.size());
        doc["n_dropped"] = res.ed.n_dropped;
        doc["timings"] = {{"ed_seconds", s.ed_seconds},
                          {"fit_seconds", s.fit_seconds},
                          {"opt_seconds", s.opt_seconds}};
        switch (res.emulator.kind) {
          case EmulatorKind::glam: doc["model"] = res.emulator.glam->to_json(); break;
          case EmulatorKind::spce: doc["model"] = res.emulator.spce->to_json(); break;
          case EmulatorKind::kriging: doc["model"] = res.emulator.kriging->to_json(); break;
        }
      } catch (const std::exception& e) {
        s.ok = false;
        s.error = e.what();
        doc["ok"] = false;
        doc["error"] = s.error;
      }
      char name[96];
      std::snprintf(name, sizeof name, "run_%s_%d_%d.json", cell.method.c_str(), cell.n_ed,
                    cell.rep);
      write_text(fs::path(config.output_dir) / name, doc.dump(2) + "\n");
    }
  };
  const int n_workers = worker_count(cells.size());
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  // Aggregate CSV in deterministic cell order.
  const int nd = problem.box.dims();
  std::string csv = "method,n_ed,seed,cost,eps_c";
  for (int k = 0; k < nd; ++k) csv += ",d_star_" + std::to_string(k);
  csv += ",fit_seconds,opt_seconds\n";
  for (const RunSummary& s : record.runs) {
    if (!s.ok) {
      ++record.n_failed;
      continue;
    }
    csv += s.method + "," + std::to_string(s.n_ed) + "," + std::to_string(s.seed) + "," +
           fmt(s.cost) + "," + fmt(s.eps_c);
    for (int k = 0; k < nd; ++k) csv += "," + fmt(s.d_star[k]);
    csv += "," + fmt(s.fit_seconds) + "," + fmt(s.opt_seconds) + "\n";
  }
  write_text(fs::path(config.output_dir) / "runs.csv", csv);

  // Per-(method, n_ed) medians over completed runs only.
  for (const auto& m : config.methods) {
    if (m == "reference") continue;
    for (int n : config.n_ed) {
      std::vector<double> costs, eps;
      for (const RunSummary& s : record.runs)
        if (s.ok && s.method == m && s.n_ed == n) {
          costs.push_back(s.cost);
          if (std::isfinite(s.eps_c)) eps.push_back(s.eps_c);
        }
      MethodStats st;
      st.method = m;
      st.n_ed = n;
      st.n_ok = int(costs.size());
      st.median_cost = quartile(costs, 0.5);
      st.iqr_cost = quartile(costs, 0.75) - quartile(costs, 0.25);
      st.median_eps = quartile(eps, 0.5);
      st.iqr_eps = quartile(eps, 0.75) - quartile(eps, 0.25);
      record.stats.push_back(st);
    }
  }
  return record;
}

void write_report(const std::string& run_dir, bool with_grid) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && name.size() > 5 &&
        name.compare(name.size() - 5, 5, ".json") == 0)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("write_report: no run files in " + run_dir);

  struct Loaded {
    fs::path path;
    nlohmann::json doc;
  };
  std::vector<Loaded> runs;
  for (const auto& f : files) {
    try {
      nlohmann::json j = load_json(f);
      if (j.at("format") != "rbdo-run") throw std::runtime_error("format mismatch");
      runs.push_back({f, std::move(j)});
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed run file " + f.string() + ": " + e.what());
    }
  }

  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> by;
  for (const auto& r : runs) {
    if (!r.doc.value("ok", false)) continue;
    auto key = std::make_pair(r.doc.at("method").get<std::string>(), r.doc.at("n_ed").get<int>());
    by[key].first.push_back(r.doc.at("cost").get<double>());
    const double e = r.doc.value("eps_c", std::numeric_limits<double>::quiet_NaN());
    if (std::isfinite(e)) by[key].second.push_back(e);
  }

  std::string med = "method,n_ed,n_runs,median_cost,iqr_cost,median_eps_c,iqr_eps_c\n";
  std::string box = "method,n_ed,metric,q1,median,q3,whisker_lo,whisker_hi\n";
  auto box_row = [&](const std::string& m, int n, const char* metric,
                     const std::vector<double>& v) {
    if (v.empty()) return;
    const double q1 = quartile(v, 0.25), q2 = quartile(v, 0.5), q3 = quartile(v, 0.75);
    const double fence_lo = q1 - 1.5 * (q3 - q1), fence_hi = q3 + 1.5 * (q3 - q1);
    double lo = q1, hi = q3;
    for (double x : v) {
      if (x >= fence_lo) lo = std::min(lo, x);
      if (x <= fence_hi) hi = std::max(hi, x);
    }
    box += m + "," + std::to_string(n) + "," + metric + "," + fmt(q1) + "," + fmt(q2) + "," +
           fmt(q3) + "," + fmt(lo) + "," + fmt(hi) + "\n";
  };
  for (const auto& [key, v] : by) {
    med += key.first + "," + std::to_string(key.second) + "," + std::to_string(v.first.size()) +
           "," + fmt(quartile(v.first, 0.5)) + "," +
           fmt(quartile(v.first, 0.75) - quartile(v.first, 0.25)) + "," +
           fmt(quartile(v.second, 0.5)) + "," +
           fmt(quartile(v.second, 0.75) - quartile(v.second, 0.25)) + "\n";
    box_row(key.first, key.second, "cost", v.first);
    box_row(key.first, key.second, "eps_c", v.second);
  }
  write_text(fs::path(run_dir) / "medians.csv", med);
  write_text(fs::path(run_dir) / "boxplot.csv", box);

  if (!with_grid) return;
  // One grid per method, from the run with the largest n_ed (then the
  // smallest repetition) that carries a model.
  std::map<std::string, const Loaded*> pick;
  for (const auto& r : runs) {
    if (!r.doc.value("ok", false) || !r.doc.contains("model")) continue;
    const std::string m = r.doc.at("method").get<std::string>();
    const Loaded*& cur = pick[m];
    if (!cur) {
      cur = &r;
      continue;
    }
    const int n_new = r.doc.at("n_ed"), n_old = cur->doc.at("n_ed");
    const int r_new = r.doc.at("repetition"), r_old = cur->doc.at("repetition");
    if (n_new > n_old || (n_new == n_old && r_new < r_old)) cur = &r;
  }
  for (const auto& [method, run] : pick) {
    const RbdoProblem p = make_problem(run->doc.at("problem").at("id"),
                                       run->doc.at("problem").at("overrides"));
    const double alpha = p.pf_target;
    std::function<double(const Eigen::VectorXd&)> quantile;
    GlamModel glam;
    SpceModel spce;
    KrigingModel krig;
    if (method == "glam") {
      glam = GlamModel::from_json(run->doc.at("model"));
      quantile = [&](const Eigen::VectorXd& d) { return glam_conditional_quantile(glam, d, alpha); };
    } else if (method == "spce") {
      spce = SpceModel::from_json(run->doc.at("model"));
      quantile = [&](const Eigen::VectorXd& d) { return spce_conditional_quantile(spce, d, alpha); };
    } else if (method == "kriging") {
      krig = KrigingModel::from_json(run->doc.at("model"));
      const int n_mc = run->doc.value("n_mc", 100000);
      const std::uint64_t seed = run->doc.at("seed").get<std::uint64_t>();
      quantile = [&, n_mc, seed](const Eigen::VectorXd& d) {
        auto sampler = [&p](const Eigen::VectorXd& dd, int n, Rng& rng) {
          return sample_inputs(p, dd, n, rng);
        };
        auto eval = [&](const Eigen::MatrixXd& rows) { return krig.predict(rows); };
        return mc_quantile(sampler, eval, d, n_mc, alpha, seed);
      };
    } else {
      continue;
    }
    const int n_side = 20;
    std::string csv = "d_0,d_1,quantile\n";
    for (int i = 0; i < n_side; ++i)
      for (int j = 0; j < n_side; ++j) {
        Eigen::VectorXd d(2);
        d[0] = p.box.lower[0] + (p.box.upper[0] - p.box.lower[0]) * double(i) / (n_side - 1);
        d[1] = p.box.lower[1] + (p.box.upper[1] - p.box.lower[1]) * double(j) / (n_side - 1);
        csv += fmt(d[0]) + "," + fmt(d[1]) + "," + fmt(quantile(d)) + "\n";
      }
    write_text(fs::path(run_dir) / ("grid_" + method + ".csv"), csv);
  }
}

}  // namespace rbdo
