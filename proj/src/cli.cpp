#include "coot/cli.hpp"

#include "coot/apps.hpp"
#include "coot/gw.hpp"
#include "coot/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace coot::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct Report {
  json body;
  bool ok = true;  ///< converged, or non-convergence explicitly allowed

  Report(const std::string& command, std::uint64_t seed) {
    body["command"] = command;
    body["seed"] = seed;
    body["cost"] = nullptr;
    body["iterations"] = 0;
    body["converged"] = true;
    body["wallMillis"] = 0.0;
    body["outputs"] = json::object();
    body["config"] = json::object();
  }
};

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void prepare_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir + ": " + ec.message());
}

void write_report(Report& r, const std::string& dir, std::ostream& out) {
  if (!dir.empty()) {
    const std::string path = join(dir, "report.json");
    r.body["outputs"]["report"] = path;
    std::ofstream f(path);
    if (!f) fail(ErrorKind::Io, "cannot write " + path);
    f << r.body.dump(2) << '\n';
  }
  out << r.body.dump(2) << '\n';
}

void emit_matrix(Report& r, const std::string& dir, const std::string& name, const Matrix& m,
                 bool heatmap) {
  if (dir.empty()) return;
  const std::string csv = join(dir, name + ".csv");
  io::write_matrix_csv(csv, m);
  r.body["outputs"][name] = csv;
  if (heatmap) {
    const std::string pgm = join(dir, name + ".pgm");
    io::export_heatmap(m, pgm);
    r.body["outputs"][name + "_heatmap"] = pgm;
  }
}

void emit_labels(Report& r, const std::string& dir, const std::string& name, const Labels& y) {
  if (dir.empty()) return;
  const std::string path = join(dir, name + ".csv");
  io::write_labels_csv(path, y);
  r.body["outputs"][name] = path;
}

int classes_in(const Labels& y) {
  int k = 0;
  for (int v : y) k = std::max(k, v + 1);
  return k;
}

void finish(Report& r, bool converged, bool allowMaxIter, Clock::time_point start) {
  r.body["converged"] = converged;
  r.ok = converged || allowMaxIter;
  r.body["wallMillis"] =
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

struct CootArgs {
  std::string x, y, loss = "sq", out, w, wp, v, vp, featureWeights = "uniform";
  double eps1 = 0.0, eps2 = 0.0, tol = 1e-7;
  std::uint64_t seed = 0;
  std::size_t restarts = 1, jobs = 1, maxIter = 50;
  bool heatmaps = false, allowMaxIter = false;
};

Histogram column_mean_weights(const Matrix& X) {
  const Vector means = X.colwise().mean().transpose();
  std::vector<double> masses(means.data(), means.data() + means.size());
  return Histogram::from_masses(masses);
}

Report run_coot(const CootArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  Matrix X = io::read_matrix_csv(a.x);
  Matrix Xp = io::read_matrix_csv(a.y);
  const Loss loss{parse_loss(a.loss)};
  auto weights = [](const std::string& path, std::size_t n) {
    return path.empty() ? uniform_histogram(n) : io::read_weights_csv(path);
  };
  Histogram v = weights(a.v, X.cols());
  Histogram vp = weights(a.vp, Xp.cols());
  if (a.featureWeights == "colmean") {
    if (a.v.empty()) v = column_mean_weights(X);
    if (a.vp.empty()) vp = column_mean_weights(Xp);
  }
  CootProblem problem(X, Xp, weights(a.w, X.rows()), weights(a.wp, Xp.rows()), v, vp, loss);
  problem.eps1 = a.eps1;
  problem.eps2 = a.eps2;
  problem.maxIter = a.maxIter;
  problem.tol = a.tol;
  const CootSolution sol = solve_coot_restarts(problem, {a.restarts, a.seed, a.jobs});

  Report r("coot", a.seed);
  r.body["config"] = {{"x", a.x},           {"y", a.y},       {"loss", a.loss},
                      {"eps1", a.eps1},     {"eps2", a.eps2}, {"restarts", a.restarts},
                      {"maxIter", a.maxIter}, {"tol", a.tol},  {"featureWeights", a.featureWeights}};
  r.body["cost"] = sol.cost;
  r.body["iterations"] = sol.iterations;
  r.body["restart"] = sol.restart;
  r.body["objectiveTrace"] = sol.objectiveTrace;
  prepare_dir(a.out);
  emit_matrix(r, a.out, "pi_s", sol.piS.plan, a.heatmaps);
  emit_matrix(r, a.out, "pi_v", sol.piV.plan, a.heatmaps);
  finish(r, sol.converged && sol.innerConverged, a.allowMaxIter, start);
  write_report(r, a.out, out);
  return r;
}

struct GwArgs {
  std::string x, y, out;
  bool similarity = false, heatmaps = false, allowMaxIter = false;
  double eps = 0.0, tol = 1e-7;
  std::uint64_t seed = 0;
  std::size_t restarts = 1, maxIter = 50;
};

Report run_gw(const GwArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  Matrix A = io::read_matrix_csv(a.x);
  Matrix B = io::read_matrix_csv(a.y);
  const SimilarityMatrix C = a.similarity ? SimilarityMatrix::generic(A) : sqeuclid_matrix(A);
  const SimilarityMatrix Cp = a.similarity ? SimilarityMatrix::generic(B) : sqeuclid_matrix(B);
  GwOptions opts;
  opts.eps = a.eps;
  opts.maxIter = a.maxIter;
  opts.tol = a.tol;
  const GwResult res = solve_gw_dc_restarts(C, Cp, uniform_histogram(C.size()),
                                            uniform_histogram(Cp.size()), kSquaredEuclidean,
                                            opts, {a.restarts, a.seed, 1});
  Report r("gw", a.seed);
  r.body["config"] = {{"x", a.x},     {"y", a.y},           {"similarity", a.similarity},
                      {"eps", a.eps}, {"restarts", a.restarts}, {"maxIter", a.maxIter},
                      {"tol", a.tol}};
  r.body["cost"] = res.cost;
  r.body["iterations"] = res.iterations;
  r.body["objectiveTrace"] = res.objectiveTrace;
  prepare_dir(a.out);
  emit_matrix(r, a.out, "pi", res.coupling.plan, a.heatmaps);
  finish(r, res.converged, a.allowMaxIter, start);
  write_report(r, a.out, out);
  return r;
}

struct CoclusterArgs {
  std::string x, out, truth;
  std::size_t g = 2, m = 2, outerIter = 20, maxIter = 50;
  double eps1 = 0.1, eps2 = 0.1;
  std::uint64_t seed = 0;
  bool heatmaps = false, allowMaxIter = false;
};

Report run_cocluster(const CoclusterArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const Matrix X = io::read_matrix_csv(a.x);
  CoclusterOptions opts;
  opts.g = a.g;
  opts.m = a.m;
  opts.eps1 = a.eps1;
  opts.eps2 = a.eps2;
  opts.outerIter = a.outerIter;
  opts.bcdMaxIter = a.maxIter;
  opts.seed = a.seed;
  const CoClustering cc = cocluster(X, opts);

  Report r("cocluster", a.seed);
  r.body["config"] = {{"x", a.x},         {"g", a.g},           {"m", a.m},
                      {"eps1", a.eps1},   {"eps2", a.eps2},     {"outerIter", a.outerIter},
                      {"maxIter", a.maxIter}};
  r.body["cost"] = cc.objectiveTrace.empty() ? cc.solution.cost : cc.objectiveTrace.back();
  r.body["iterations"] = cc.outerIterations;
  r.body["objectiveTrace"] = cc.objectiveTrace;
  if (!a.truth.empty()) {
    const Labels rows = io::read_labels_csv(join(a.truth, "rows.csv"));
    const Labels cols = io::read_labels_csv(join(a.truth, "cols.csv"));
    r.body["cce"] = cce(cc.rowLabels, rows, cc.colLabels, cols);
  }
  prepare_dir(a.out);
  emit_labels(r, a.out, "row_labels", cc.rowLabels);
  emit_labels(r, a.out, "col_labels", cc.colLabels);
  emit_matrix(r, a.out, "Xc", cc.Xc, false);
  emit_matrix(r, a.out, "pi_s", cc.solution.piS.plan, a.heatmaps);
  emit_matrix(r, a.out, "pi_v", cc.solution.piV.plan, a.heatmaps);
  finish(r, cc.converged, a.allowMaxIter, start);
  write_report(r, a.out, out);
  return r;
}

struct HdaArgs {
  std::string xs, xt, ys, ytPartial, penalty = "auto", out;
  double eps1 = 0.0, eps2 = 0.0;
  std::size_t restarts = 1, jobs = 1, maxIter = 50;
  std::uint64_t seed = 0;
  bool heatmaps = false, allowMaxIter = false;
};

Report run_hda(const HdaArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const Matrix Xs = io::read_matrix_csv(a.xs);
  const Matrix Xt = io::read_matrix_csv(a.xt);
  const Labels ys = io::read_labels_csv(a.ys);
  std::optional<Labels> yt;
  if (!a.ytPartial.empty()) yt = io::read_labels_csv(a.ytPartial);
  const int classes = std::max(classes_in(ys), yt ? classes_in(*yt) : 0);
  const LabelMatrix Ys(ys, static_cast<std::size_t>(std::max(classes, 1)));
  std::optional<LabelMatrix> Yt;
  if (yt) Yt.emplace(*yt, Ys.classes());

  HdaOptions opts;
  opts.eps1 = a.eps1;
  opts.eps2 = a.eps2;
  opts.maxIter = a.maxIter;
  opts.restarts = {a.restarts, a.seed, a.jobs};
  if (a.penalty != "auto") {
    try {
      opts.penalty = std::stod(a.penalty);
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "--penalty must be 'auto' or a positive number");
    }
  }
  const HdaResult res = hda_transfer(Xs, Xt, Ys, Yt, opts);

  Report r("hda", a.seed);
  r.body["config"] = {{"xs", a.xs},       {"xt", a.xt},         {"ys", a.ys},
                      {"ytPartial", a.ytPartial}, {"penalty", a.penalty}, {"eps1", a.eps1},
                      {"eps2", a.eps2},   {"restarts", a.restarts}, {"maxIter", a.maxIter}};
  r.body["cost"] = res.solution.cost;
  r.body["iterations"] = res.solution.iterations;
  prepare_dir(a.out);
  emit_labels(r, a.out, "labels", res.propagation.labels);
  emit_matrix(r, a.out, "scores", res.propagation.scores, false);
  emit_matrix(r, a.out, "pi_s", res.solution.piS.plan, a.heatmaps);
  emit_matrix(r, a.out, "pi_v", res.solution.piV.plan, a.heatmaps);
  finish(r, res.solution.converged && res.solution.innerConverged, a.allowMaxIter, start);
  write_report(r, a.out, out);
  return r;
}

struct ElectionArgs {
  std::string x, y, out;
  std::size_t restarts = 20, jobs = 1;
  std::uint64_t seed = 0;
  bool allowMaxIter = false;
};

Report run_election(const ElectionArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const Election E = Election::from_positions(io::read_matrix_csv(a.x));
  const Election Ep = Election::from_positions(io::read_matrix_csv(a.y));
  const ElectionDistance d = election_distance(E, Ep, {a.restarts, a.seed, a.jobs});
  Report r("election", a.seed);
  r.body["config"] = {{"x", a.x}, {"y", a.y}, {"restarts", a.restarts}};
  r.body["cost"] = d.distance;
  r.body["iterations"] = d.solution.iterations;
  if (d.oracleDistance) {
    r.body["oracleCost"] = *d.oracleDistance;
    r.body["certified"] = d.certified;
  }
  prepare_dir(a.out);
  emit_matrix(r, a.out, "pi_s", d.solution.piS.plan, false);
  emit_matrix(r, a.out, "pi_v", d.solution.piV.plan, false);
  finish(r, d.solution.converged, a.allowMaxIter, start);
  write_report(r, a.out, out);
  return r;
}

struct GenArgs {
  std::string preset, out;
  std::size_t n = 0, d = 0, g = 0, m = 0;
  double separation = kWellSeparated, noise = 1.0;
  bool unequal = false;
  std::uint64_t seed = 0;
};

Report run_gen(const GenArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  BlockConfig cfg;
  if (!a.preset.empty()) {
    cfg = block_preset(a.preset);
  } else {
    cfg.n = a.n;
    cfg.d = a.d;
    cfg.g = a.g;
    cfg.m = a.m;
    cfg.rowProportions = a.unequal ? unequal_proportions(a.g) : equal_proportions(a.g);
    cfg.colProportions = a.unequal ? unequal_proportions(a.m) : equal_proportions(a.m);
    cfg.separation = a.separation;
    cfg.noise = a.noise;
  }
  const BlockData data = generate_blocks(cfg, a.seed);
  Report r("gen", a.seed);
  r.body["config"] = {{"preset", a.preset},          {"n", cfg.n},
                      {"d", cfg.d},                  {"g", cfg.g},
                      {"m", cfg.m},                  {"rowProportions", cfg.rowProportions},
                      {"colProportions", cfg.colProportions}, {"separation", cfg.separation},
                      {"noise", cfg.noise}};
  prepare_dir(a.out);
  emit_matrix(r, a.out, "X", data.X, false);
  emit_matrix(r, a.out, "means", data.means, false);
  emit_labels(r, a.out, "rows", data.trueRows);
  emit_labels(r, a.out, "cols", data.trueCols);
  finish(r, true, false, start);
  write_report(r, a.out, out);
  return r;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::Config:
      return kUsage;
    default:
      return kNumeric;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Co-optimal transport toolkit"};
  app.require_subcommand(1);

  CootArgs coot;
  auto* c = app.add_subcommand("coot", "Solve COOT between two data matrices");
  c->add_option("--x", coot.x, "first matrix (CSV)")->required();
  c->add_option("--y", coot.y, "second matrix (CSV)")->required();
  c->add_option("--loss", coot.loss, "sq | abs | kl")->check(CLI::IsMember({"sq", "abs", "kl"}));
  c->add_option("--eps1", coot.eps1, "entropic strength on the sample coupling")->check(CLI::NonNegativeNumber);
  c->add_option("--eps2", coot.eps2, "entropic strength on the feature coupling")->check(CLI::NonNegativeNumber);
  c->add_option("--seed", coot.seed)->required();
  c->add_option("--restarts", coot.restarts)->check(CLI::PositiveNumber);
  c->add_option("--jobs", coot.jobs)->check(CLI::PositiveNumber);
  c->add_option("--max-iter", coot.maxIter);
  c->add_option("--tol", coot.tol)->check(CLI::NonNegativeNumber);
  c->add_option("--w", coot.w, "sample weights of X");
  c->add_option("--wp", coot.wp, "sample weights of Y");
  c->add_option("--v", coot.v, "feature weights of X");
  c->add_option("--vp", coot.vp, "feature weights of Y");
  c->add_option("--feature-weights", coot.featureWeights, "uniform | colmean")
      ->check(CLI::IsMember({"uniform", "colmean"}));
  c->add_option("--out", coot.out)->required();
  c->add_flag("--heatmaps", coot.heatmaps, "also write PGM heatmaps");
  c->add_flag("--allow-maxiter", coot.allowMaxIter);

  GwArgs gw;
  auto* g = app.add_subcommand("gw", "Gromov-Wasserstein by the DC iteration");
  g->add_option("--x", gw.x)->required();
  g->add_option("--y", gw.y)->required();
  g->add_flag("--similarity", gw.similarity, "inputs are similarity matrices, not point clouds");
  g->add_option("--eps", gw.eps)->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gw.seed)->required();
  g->add_option("--restarts", gw.restarts)->check(CLI::PositiveNumber);
  g->add_option("--max-iter", gw.maxIter);
  g->add_option("--tol", gw.tol)->check(CLI::NonNegativeNumber);
  g->add_option("--out", gw.out)->required();
  g->add_flag("--heatmaps", gw.heatmaps);
  g->add_flag("--allow-maxiter", gw.allowMaxIter);

  CoclusterArgs cc;
  auto* k = app.add_subcommand("cocluster", "COOT co-clustering");
  k->add_option("--x", cc.x)->required();
  k->add_option("-g,--row-clusters", cc.g)->required()->check(CLI::PositiveNumber);
  k->add_option("-m,--col-clusters", cc.m)->required()->check(CLI::PositiveNumber);
  k->add_option("--eps1", cc.eps1)->check(CLI::NonNegativeNumber);
  k->add_option("--eps2", cc.eps2)->check(CLI::NonNegativeNumber);
  k->add_option("--outer-iter", cc.outerIter);
  k->add_option("--max-iter", cc.maxIter);
  k->add_option("--truth", cc.truth, "directory holding rows.csv and cols.csv");
  k->add_option("--seed", cc.seed)->required();
  k->add_option("--out", cc.out);
  k->add_flag("--heatmaps", cc.heatmaps);
  k->add_flag("--allow-maxiter", cc.allowMaxIter);

  HdaArgs hda;
  auto* h = app.add_subcommand("hda", "Heterogeneous domain adaptation by label propagation");
  h->add_option("--xs", hda.xs)->required();
  h->add_option("--xt", hda.xt)->required();
  h->add_option("--ys", hda.ys)->required();
  h->add_option("--yt-partial", hda.ytPartial);
  h->add_option("--penalty", hda.penalty, "auto or a positive number");
  h->add_option("--eps1", hda.eps1)->check(CLI::NonNegativeNumber);
  h->add_option("--eps2", hda.eps2)->check(CLI::NonNegativeNumber);
  h->add_option("--restarts", hda.restarts)->check(CLI::PositiveNumber);
  h->add_option("--jobs", hda.jobs)->check(CLI::PositiveNumber);
  h->add_option("--max-iter", hda.maxIter);
  h->add_option("--seed", hda.seed)->required();
  h->add_option("--out", hda.out);
  h->add_flag("--heatmaps", hda.heatmaps);
  h->add_flag("--allow-maxiter", hda.allowMaxIter);

  ElectionArgs el;
  auto* e = app.add_subcommand("election", "Election isomorphism distance");
  e->add_option("--x", el.x)->required();
  e->add_option("--y", el.y)->required();
  e->add_option("--restarts", el.restarts)->check(CLI::PositiveNumber);
  e->add_option("--jobs", el.jobs)->check(CLI::PositiveNumber);
  e->add_option("--seed", el.seed, "restart seed (default 0)");
  e->add_option("--out", el.out);
  e->add_flag("--allow-maxiter", el.allowMaxIter);

  GenArgs gen;
  auto* s = app.add_subcommand("gen", "Simulated block data");
  s->add_option("--preset", gen.preset)->check(CLI::IsMember({"D1", "D2", "D3", "D4"}));
  s->add_option("--n", gen.n);
  s->add_option("--d", gen.d);
  s->add_option("-g", gen.g);
  s->add_option("-m", gen.m);
  s->add_option("--separation", gen.separation);
  s->add_option("--noise", gen.noise);
  s->add_flag("--unequal", gen.unequal);
  s->add_option("--seed", gen.seed)->required();
  s->add_option("--out", gen.out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << pe.what() << '\n';
    return kUsage;
  }

  try {
    std::optional<Report> r;
    if (*c) r = run_coot(coot, out);
    else if (*g) r = run_gw(gw, out);
    else if (*k) r = run_cocluster(cc, out);
    else if (*h) r = run_hda(hda, out);
    else if (*e) r = run_election(el, out);
    else if (*s) r = run_gen(gen, out);
    if (r && !r->ok) {
      err << "error: solver did not converge (pass --allow-maxiter to accept)\n";
      return kNotConverged;
    }
    return kOk;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code(ex.kind());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kNumeric;
  }
}

}  // namespace coot::cli
