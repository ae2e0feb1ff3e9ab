#include "junction/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "junction/studies.hpp"

namespace junction {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("--eps", "expected a comma-separated list");
  return out;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + (dir / name).string());
  return out;
}

int cmd_validate(const std::string& config, const fs::path& outdir) {
  JunctionSpec spec = load_spec_file(config);
  ValidationReport rep = validate(spec);
  std::ofstream out = open_out(outdir, "validation_report.csv");
  out << "check,pass,residual,location\n";
  char buf[256];
  for (const auto& c : rep.checks) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%s\n", c.name.c_str(), c.pass ? 1 : 0,
                  c.residual, c.location.c_str());
    out << buf;
  }
  int failed = 0;
  for (const auto& c : rep.checks)
    if (!c.pass) ++failed;
  std::cout << "validate: " << rep.checks.size() - failed << "/" << rep.checks.size()
            << " checks passed\n";
  return rep.all_pass() ? 0 : 2;
}

int cmd_limit(const std::string& config, const fs::path& outdir, int order) {
  auto spec = std::make_shared<JunctionSpec>(load_spec_file(config));
  auto coeffs = build_expansion(spec, order);
  std::ofstream out = open_out(outdir, "limit_profiles.csv");
  std::vector<const EdgeProfile*> profiles;
  for (int k = 0; k <= order; ++k)
    for (int e = 0; e < 3; ++e)
      profiles.push_back(coeffs->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)].get());
  export_profiles_csv(out, profiles);
  std::cout << "limit: kirchhoff residual";
  for (double r : coeffs->kirchhoff) std::cout << " " << r;
  std::cout << "\n";
  return 0;
}

int cmd_expand(const std::string& config, const fs::path& outdir, int order, double eps,
               const std::string& probe_file, bool with_grad) {
  auto spec = std::make_shared<JunctionSpec>(load_spec_file(config));
  auto coeffs = build_expansion(spec, order);
  PartialSum U = assemble_partial_sum(coeffs, eps, order);

  std::ifstream in(probe_file);
  if (!in) throw std::runtime_error("cannot open probe file " + probe_file);
  std::ofstream out = open_out(outdir, "expand_values.csv");
  out << (with_grad ? "x1,x2,x3,t,U,gU1,gU2,gU3\n" : "x1,x2,x3,t,U\n");
  std::string line;
  char buf[320];
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    std::stringstream ss(line);
    std::array<double, 4> v{};
    char comma;
    ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3];
    if (!ss) continue;
    std::array<double, 3> x{v[0], v[1], v[2]};
    if (!U.inside(x)) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,outside\n", v[0], v[1], v[2],
                    v[3]);
      out << buf;
      continue;
    }
    if (with_grad) {
      auto gv = U.eval_with_gradient(x, v[3]);
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.17g,%.17g,%.17g,%.17g\n", v[0],
                    v[1], v[2], v[3], gv.value, gv.grad[0], gv.grad[1], gv.grad[2]);
    } else {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.17g\n", v[0], v[1], v[2], v[3],
                    U.eval(x, v[3]));
    }
    out << buf;
  }
  return 0;
}

int cmd_residual(const std::string& config, const fs::path& outdir, int order,
                 const std::string& eps_text, int samples, std::uint64_t seed) {
  auto spec = std::make_shared<JunctionSpec>(load_spec_file(config));
  auto coeffs = build_expansion(spec, order);
  ResidualReport rep = residual_study(coeffs, order, parse_eps_list(eps_text), samples, seed);
  std::ofstream out = open_out(outdir, "residual_table.csv");
  rep.write_csv(out);
  std::cout << "residual: interior slope " << rep.slope_interior << ", boundary slope "
            << rep.slope_boundary << "\n";
  return 0;
}

int cmd_reference(const std::string& config, const fs::path& outdir, double eps, int refine) {
  JunctionSpec spec = load_spec_file(config);
  double hmin = 1e300;
  for (const auto& e : spec.edges)
    for (int i = 0; i <= 20; ++i) hmin = std::min(hmin, e.h(e.length * i / 20.0));
  VoxelMesh mesh = mesh_junction(spec, eps, eps * hmin / refine);
  double dt = 0.1 * mesh.dx();
  FullSolution sol;
  for (;;) {
    try {
      sol = solve_full(spec, eps, mesh, dt, spec.T, 9);
      break;
    } catch (const std::invalid_argument&) {
      dt *= 0.5;
      if (dt < 1e-9) throw;
    }
  }
  {
    std::ofstream out = open_out(outdir, "flux_audit.csv");
    out << "t,net_boundary_flux\n";
    char buf[96];
    for (const auto& fa : sol.flux_audit) {
      std::snprintf(buf, sizeof buf, "%.12g,%.17g\n", fa[0], fa[1]);
      out << buf;
    }
  }
  {
    std::ofstream out = open_out(outdir, "reference_snapshots.dat");
    out << "junction-asy reference snapshots\n";
    out << "cells " << mesh.n_cells() << " tsamples " << sol.snapshot_times.size()
        << " layout u[tsample][cell] little-endian float64\n";
    out << "binary\n";
    for (const auto& snap : sol.snapshots)
      out.write(reinterpret_cast<const char*>(snap.data()),
                static_cast<std::streamsize>(snap.size() * sizeof(double)));
  }
  std::cout << "reference: " << mesh.n_cells() << " cells, mass audit "
            << sol.mass_audit_max << "\n";
  return 0;
}

int cmd_compare(const std::string& config, const fs::path& outdir, int order,
                const std::string& eps_text, std::uint64_t seed, int refine) {
  auto spec = std::make_shared<JunctionSpec>(load_spec_file(config));
  auto coeffs = build_expansion(spec, order == 0 ? 1 : order);
  ErrorReport rep = error_study(coeffs, order == 0 ? 1 : order, parse_eps_list(eps_text), seed,
                                refine);
  std::ofstream out = open_out(outdir, "error_table.csv");
  rep.write_csv(out);
  std::cout << "compare: order fit " << rep.order_fit
            << (rep.inconclusive ? " (inconclusive: mesh error dominates)" : "") << "\n";
  return 0;
}

int cmd_report(const fs::path& outdir) {
  std::ofstream out = open_out(outdir, "report.txt");
  int found = 0;
  for (const char* name : {"validation_report.csv", "limit_profiles.csv", "residual_table.csv",
                           "error_table.csv", "flux_audit.csv"}) {
    fs::path p = outdir / name;
    if (!fs::exists(p)) continue;
    ++found;
    out << "== " << name << " ==\n";
    std::ifstream in(p);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      if (rows <= 12 || line.find("slope") != std::string::npos ||
          line.find("order_fit") != std::string::npos)
        out << line << "\n";
    }
    out << "(" << rows << " rows)\n\n";
  }
  std::cout << "report: summarized " << found << " artifacts into report.txt\n";
  return found > 0 ? 0 : 64;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Asymptotic expansion toolkit for convection-dominated transport in a thin "
               "three-branch junction"};
  app.require_subcommand(1);

  std::string config, outdir = "out", eps_text = "0.1", probe_file;
  int order = 1, samples = 400, refine = 4;
  double eps = 0.1;
  std::uint64_t seed = 12345;
  bool with_grad = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config) cmd->add_option("--config", config, "JSON instance file")->required();
    cmd->add_option("--out", outdir, "output directory");
  };

  CLI::App* v = app.add_subcommand("validate", "run the standing-assumption checklist");
  add_common(v);

  CLI::App* l = app.add_subcommand("limit", "solve the graph limit problems");
  add_common(l);
  l->add_option("--order", order, "highest coefficient order");

  CLI::App* x = app.add_subcommand("expand", "evaluate the glued partial sum on probes");
  add_common(x);
  x->add_option("--order", order, "partial-sum order M");
  x->add_option("--eps", eps, "epsilon");
  x->add_option("--probe", probe_file, "probe cloud CSV (x1,x2,x3,t)")->required();
  x->add_flag("--grad", with_grad, "emit analytic gradients");

  CLI::App* r = app.add_subcommand("residual", "interior/boundary residual sweep");
  add_common(r);
  r->add_option("--order", order, "partial-sum order M");
  r->add_option("--eps", eps_text, "comma-separated epsilon list");
  r->add_option("--samples", samples, "samples per region");
  r->add_option("--seed", seed, "sampling seed");

  CLI::App* f = app.add_subcommand("reference", "full 3d reference solve");
  add_common(f);
  f->add_option("--eps", eps, "epsilon");
  f->add_option("--refine", refine, "cells across eps*h_min (>= 4)");

  CLI::App* c = app.add_subcommand("compare", "sup/gradient error against the full solver");
  add_common(c);
  c->add_option("--order", order, "compare U_{order-1}");
  c->add_option("--eps", eps_text, "comma-separated epsilon list");
  c->add_option("--seed", seed, "probe seed");
  c->add_option("--refine", refine, "cells across eps*h_min");

  CLI::App* p = app.add_subcommand("report", "summarize artifacts in the output directory");
  add_common(p, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (v->parsed()) return cmd_validate(config, outdir);
    if (l->parsed()) return cmd_limit(config, outdir, order);
    if (x->parsed()) return cmd_expand(config, outdir, order, eps, probe_file, with_grad);
    if (r->parsed()) return cmd_residual(config, outdir, order, eps_text, samples, seed);
    if (f->parsed()) return cmd_reference(config, outdir, eps, refine);
    if (c->parsed()) return cmd_compare(config, outdir, order, eps_text, seed, refine);
    if (p->parsed()) return cmd_report(outdir);
  } catch (const SpecError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ExprError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
  return 64;
}

}  // namespace junction
