#pragma once

// Subcommands of the twistcmc tool. Exit codes: 0 PASS, 2 theorem condition
// violated (FAIL), 1 operational error.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "twistcmc/cli/config.hpp"
#include "twistcmc/cli/output.hpp"
#include "twistcmc/errors.hpp"
#include "twistcmc/spacetime.hpp"
#include "twistcmc/theorem.hpp"

namespace twistcmc::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFail = 2;

/// Deviations at or below this are treated as exact when fitting convergence orders.
inline constexpr double kExactFloor = 1e-12;

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string config;
  bool oracle = false;  ///< OR-ed with [run] oracle
  std::string out_dir = ".";
};

inline int cmd_verify(const VerifyArgs& args, std::ostream& log, std::ostream& err) {
  const std::filesystem::path out(args.out_dir);
  try {
    const ScenarioConfig cfg = load_config(args.config);
    const ScenarioInputs in = compile_inputs(cfg);
    const TwistScenario sc = build_from_inputs(cfg, in);
    VerifyOptions opts;
    opts.run_oracle = args.oracle || cfg.oracle;
    opts.tol_scale = cfg.tol_scale;
    const ScenarioReport rep = verify_cmc(sc, opts);

    auto csv = detail::open_output(out / "report.csv");
    write_report_csv(csv, rep);
    auto summary = detail::open_output(out / "summary.txt");
    write_summary(summary, rep);

    log << (rep.pass ? "PASS" : "FAIL") << ": " << rep.rows.size() << " slices, max |k~ - target| = " << fmt(rep.max_dev)
        << " (tolerance " << fmt(rep.tolerance) << "), min margin = " << fmt(rep.margin_min) << '\n';
    return rep.pass ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    try {
      auto summary = detail::open_output(out / "summary.txt");
      summary << "result: ERROR\nerror: " << e.what() << '\n';
    } catch (const std::exception&) {
    }
    return kExitError;
  }
}

// ---------------------------------------------------------------------------
// sweep

struct SweepLevel {
  int nx = 0;
  int ny = 0;
  int n_tau = 0;
  double h = 0.0;
  double max_dev = 0.0;
  double oracle_max_dev = 0.0;
  bool pass = false;
};

/// log2(coarse / fine), or nullopt when both deviations are at the exact floor.
inline std::optional<double> convergence_order(double coarse, double fine) {
  if (coarse <= kExactFloor && fine <= kExactFloor) return std::nullopt;
  return std::log2(coarse / fine);
}

inline std::string format_order(const std::optional<double>& order) {
  if (!order) return "exact";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *order);
  return buf;
}

/// Runs verify (with oracle) at n, 2n, 4n, ... starting from base_nx (default: the configured nx).
inline std::vector<SweepLevel> run_sweep(const ScenarioConfig& cfg, int levels, std::optional<int> base_nx = {}) {
  if (levels < 2 || levels > 5) throw ConfigError("sweep: levels must lie in [2, 5]");
  const int nx0 = base_nx.value_or(cfg.nx);
  const double ratio = static_cast<double>(nx0) / cfg.nx;
  const int ny0 = static_cast<int>(std::lround(cfg.ny * ratio));
  const int nt0 = static_cast<int>(std::lround(cfg.n_tau * ratio));

  std::vector<SweepLevel> out;
  for (int l = 0; l < levels; ++l) {
    const int scale = 1 << l;
    const ScenarioInputs in = compile_inputs(cfg, nx0 * scale, ny0 * scale, nt0 * scale);
    const TwistScenario sc = build_from_inputs(cfg, in);
    VerifyOptions opts;
    opts.run_oracle = true;
    opts.tol_scale = cfg.tol_scale;
    const ScenarioReport rep = verify_cmc(sc, opts);
    out.push_back({sc.grid().nx(), sc.grid().ny(), sc.n_tau(), rep.h, rep.max_dev, rep.oracle_max_dev.value_or(0.0),
                   rep.pass});
  }
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepLevel>& levels) {
  out << "level,nx,ny,n_tau,h,max_dev,order_max_dev,oracle_max_dev,order_oracle,pass\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const SweepLevel& s = levels[l];
    std::string o1, o2;
    if (l > 0) {
      o1 = format_order(convergence_order(levels[l - 1].max_dev, s.max_dev));
      o2 = format_order(convergence_order(levels[l - 1].oracle_max_dev, s.oracle_max_dev));
    }
    out << l << ',' << s.nx << ',' << s.ny << ',' << s.n_tau << ',' << fmt(s.h) << ',' << fmt(s.max_dev) << ',' << o1
        << ',' << fmt(s.oracle_max_dev) << ',' << o2 << ',' << (s.pass ? "PASS" : "FAIL") << '\n';
  }
}

struct SweepArgs {
  std::string config;
  int levels = 3;
  std::optional<int> base_nx;
  std::string out_dir = ".";
};

inline int cmd_sweep(const SweepArgs& args, std::ostream& log, std::ostream& err) {
  try {
    const ScenarioConfig cfg = load_config(args.config);
    const auto levels = run_sweep(cfg, args.levels, args.base_nx);
    auto csv = detail::open_output(std::filesystem::path(args.out_dir) / "sweep.csv");
    write_sweep_csv(csv, levels);
    write_sweep_csv(log, levels);
    bool pass = true;
    for (const auto& l : levels) pass = pass && l.pass;
    return pass ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

// ---------------------------------------------------------------------------
// export

inline constexpr std::array<std::string_view, 6> kExportFields{"s2", "f", "beta", "k_tilde", "k_tilde_oracle",
                                                               "margin"};

inline std::string export_field_list() {
  std::string s;
  for (auto f : kExportFields) s += (s.empty() ? "" : ", ") + std::string(f);
  return s;
}

/// Field on the slice tau. Closed-form fields are evaluated at tau itself; the oracle
/// needs lattice neighbours and uses the nearest interior lattice sample.
inline ScalarField export_field(const TwistScenario& sc, std::string_view field, double tau) {
  if (std::find(kExportFields.begin(), kExportFields.end(), field) == kExportFields.end()) {
    throw Error("unknown field '" + std::string(field) + "'; valid fields: " + export_field_list());
  }
  const ValidWindow w = check_positivity_window(sc);
  const double slack = 1e-9 * (sc.alpha().tau_max() - sc.alpha().tau_min());
  if (w.empty() || tau < w.tau_lo - slack || tau > w.tau_hi + slack) {
    throw Error("tau = " + fmt(tau) + " lies outside the valid window [" + fmt(w.tau_lo) + ", " + fmt(w.tau_hi) + "]");
  }
  if (field == "f") return sc.f();
  if (field == "beta") return sc.beta();
  if (field == "s2") return ScalarField(sc.grid(), s_squared_slice(sc, tau));
  if (field == "margin") return spacelike_margin(sc, tau);
  if (field == "k_tilde") return tilted_mean_curvature_closed(sc, tau).k_tilde;

  const int k = static_cast<int>(std::lround((tau - sc.alpha().tau_min()) / sc.tau_step()));
  if (k <= w.first || k >= w.last) throw Error("k_tilde_oracle needs an interior tau sample of the valid window");
  return -1.0 * oracle_divergence_slice(sc, k).div_x;
}

struct ExportArgs {
  std::string config;
  std::string field;
  double tau = 0.0;
  std::string format = "csv";
  std::string out;
};

inline int cmd_export(const ExportArgs& args, std::ostream& log, std::ostream& err) {
  try {
    if (args.format != "csv" && args.format != "pgm") throw Error("format must be csv or pgm");
    if (std::find(kExportFields.begin(), kExportFields.end(), args.field) == kExportFields.end()) {
      throw Error("unknown field '" + args.field + "'; valid fields: " + export_field_list());
    }
    const ScenarioConfig cfg = load_config(args.config);
    const ScenarioInputs in = compile_inputs(cfg);
    const TwistScenario sc = build_from_inputs(cfg, in);
    const ScalarField f = export_field(sc, args.field, args.tau);
    auto out = detail::open_output(args.out);
    if (args.format == "csv") {
      write_field_csv(out, f);
    } else {
      write_field_pgm(out, f);
    }
    log << "wrote " << args.field << " at tau = " << fmt(args.tau) << " to " << args.out << '\n';
    return kExitPass;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace twistcmc::cli
