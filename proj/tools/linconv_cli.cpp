// linconv command-line front end. Every command reads a family JSON file ("-" is stdin) and
// writes JSON to stdout (or --out). Exit codes: 0 completed, 1 input error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linconv/linconv.hpp"

namespace {

using namespace linconv;

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_input(path));
  } catch (const Json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

MatrixFamily read_family(const std::string& path) { return family_from_json(read_json(path)); }

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream os(out);
  if (!os) throw InputError("cannot write '" + out + "'");
  os << j.dump(2) << "\n";
}

Vector parse_csv_vector(const std::string& s, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InputError(what + ": cannot parse '" + item + "' as a number");
    }
  }
  Vector v = Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
  require_finite(v, what);
  return v;
}

// constant:w1,..,wM | cycle:i,j,..[@dwell] | random[:seed][@dwell] | dirichlet[:seed][@dwell] | spike[:h_max]
SwitchingSignal parse_signal(std::string spec, std::uint64_t default_seed) {
  double dwell = 1.0;
  if (auto at = spec.rfind('@'); at != std::string::npos) {
    dwell = parse_csv_vector(spec.substr(at + 1), "dwell")(0);
    spec = spec.substr(0, at);
  }
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto seed = [&] { return arg.empty() ? default_seed : static_cast<std::uint64_t>(std::stoull(arg)); };
  if (head == "constant") return SwitchingSignal::constant(parse_csv_vector(arg, "constant weight"));
  if (head == "cycle") {
    const Vector v = parse_csv_vector(arg, "cycle");
    std::vector<Index> seq;
    for (Index i = 0; i < v.size(); ++i) seq.push_back(static_cast<Index>(v(i)));
    return SwitchingSignal::cycle(seq, dwell);
  }
  if (head == "random") return SwitchingSignal::random_vertex(seed(), dwell);
  if (head == "dirichlet") return SwitchingSignal::random_dirichlet(seed(), dwell);
  if (head == "spike") return spike_schedule_signal(arg.empty() ? 40 : std::stoi(arg));
  throw InputError("unknown signal '" + spec + "' (use constant:, cycle:, random, dirichlet or spike)");
}

Tolerances tolerances(std::optional<double> tol) {
  Tolerances t;
  if (tol) t.residual_tol = *tol;
  t.validate();
  return t;
}

Json example_listing() {
  Json list = Json::array();
  for (const auto& n : catalogue_names()) {
    const ExampleSpec e = catalogue(n);
    Json item = {{"name", e.name},
                 {"summary", e.summary},
                 {"mode", to_string(e.family.mode())},
                 {"expected_strong", to_string(e.expected_strong)},
                 {"expected_weak", to_string(e.expected_weak)}};
    if (e.expected_dual_strong) item["expected_dual_strong"] = to_string(*e.expected_dual_strong);
    list.push_back(std::move(item));
  }
  return {{"examples", list}};
}

void emit_error(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence analysis of linear systems and polytopic linear inclusions"};
  app.require_subcommand(1);
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = default_threads();
  app.add_option("--tol", tol, "residual tolerance for LMI and kernel checks");
  app.add_option("--seed", seed, "seed for randomized signals and scans");
  app.add_option("--out", out, "write JSON here instead of stdout");
  app.add_option("--threads", threads, "worker threads for grid scans")->check(CLI::PositiveNumber);

  std::string family_path, report_path, method, candidate, signal = "random", x0_csv, x_csv, p_path, csv_path;
  double horizon = 10, sample_dt = 0;
  std::size_t scan = 0;
  std::string example_name;

  auto* c_analyze = app.add_subcommand("analyze", "decide strong and weak convergence with evidence");
  c_analyze->add_option("family", family_path)->required();

  auto* c_certify = app.add_subcommand("certify", "search for a single certificate");
  c_certify->add_option("family", family_path)->required();
  c_certify->add_option("--method", method)->required()->check(CLI::IsMember({"strong-lmi", "weak-lmi", "cqlf", "polyhedral"}));
  c_certify->add_option("--candidate", candidate, "JSON matrix X for --method polyhedral");

  auto* c_sim = app.add_subcommand("simulate", "simulate one trajectory under a switching signal");
  c_sim->add_option("family", family_path)->required();
  c_sim->add_option("--signal", signal, "constant:w,.. | cycle:i,..[@dwell] | random[:seed][@dwell] | dirichlet[:seed][@dwell] | spike[:h_max]");
  c_sim->add_option("--x0", x0_csv)->required();
  c_sim->add_option("--horizon", horizon, "steps (dt) or end time (ct)");
  c_sim->add_option("--dt", sample_dt, "sampling interval for ct (default horizon/1000)");
  c_sim->add_option("--csv", csv_path, "write the trajectory as CSV");

  auto* c_wk = app.add_subcommand("weak-kernel", "weak kernel membership or triviality scan (ct)");
  c_wk->add_option("family", family_path)->required();
  auto* opt_x = c_wk->add_option("--x", x_csv);
  auto* opt_scan = c_wk->add_option("--scan", scan, "number of random sphere samples");
  opt_x->excludes(opt_scan);

  auto* c_las = app.add_subcommand("lasalle", "LaSalle set for a weak quadratic Lyapunov function (ct)");
  c_las->add_option("family", family_path)->required();
  c_las->add_option("--P", p_path)->required();

  auto* c_dual = app.add_subcommand("dual", "emit the transposed family");
  c_dual->add_option("family", family_path)->required();

  auto* c_rate = app.add_subcommand("rate", "exponential rate estimate from a strong certificate");
  c_rate->add_option("family", family_path)->required();

  auto* c_ex = app.add_subcommand("examples", "list the catalogue or emit a named family");
  c_ex->add_option("name", example_name);

  auto* c_verify = app.add_subcommand("verify", "re-check every claim in a report");
  c_verify->add_option("report", report_path)->required();
  c_verify->add_option("family", family_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("input", e.what());
    return 1;
  }

  try {
    const Tolerances t = tolerances(tol);
    if (c_analyze->parsed()) {
      const MatrixFamily f = read_family(family_path);
      AnalyzeOptions opt;
      opt.tol = t;
      opt.seed = seed;
      opt.threads = threads;
      emit(to_json(analyze(f, opt), f), out);
    } else if (c_certify->parsed()) {
      std::optional<Matrix> x;
      if (!candidate.empty()) {
        const Json cj = read_json(candidate);
        x = matrix_from_json(cj.is_object() ? cj.at("X") : cj, "candidate X");
      }
      emit(certify_report(read_family(family_path), method, t, x, seed, threads), out);
    } else if (c_sim->parsed()) {
      const MatrixFamily f = read_family(family_path);
      const SwitchingSignal sig = parse_signal(signal, seed);
      const Vector x0 = parse_csv_vector(x0_csv, "x0");
      Trajectory tr;
      if (f.mode() == Mode::DT) {
        if (horizon != std::floor(horizon) || horizon < 1) throw InputError("dt horizon must be a positive whole number of steps");
        tr = simulate_dt(f, sig, x0, static_cast<Index>(horizon), t);
      } else {
        tr = simulate_ct(f, sig, x0, horizon, sample_dt > 0 ? sample_dt : horizon / 1000.0, t);
      }
      Json j = {{"trajectory", to_json(tr)}, {"signal", signal}, {"seed", seed}};
      j["diagnostics"] = tr.limit ? to_json(residual_diagnostics(tr, f)) : Json(nullptr);
      if (!csv_path.empty()) {
        std::ofstream os(csv_path);
        if (!os) throw InputError("cannot write '" + csv_path + "'");
        write_csv(os, tr);
      }
      emit(j, out);
    } else if (c_wk->parsed()) {
      const MatrixFamily f = read_family(family_path);
      if (opt_x->count() == 0 && opt_scan->count() == 0) throw InputError("weak-kernel needs --x or --scan");
      if (!x_csv.empty()) {
        const WeakKernelResult r = weak_kernel_membership(f, parse_csv_vector(x_csv, "x"), t);
        emit({{"x", to_json(r.x)}, {"member", r.feasible}, {"w", r.feasible ? to_json(r.w) : Json(nullptr)},
              {"residual", r.feasible ? Json(r.residual) : Json(nullptr)}},
             out);
      } else {
        const TrivialityScan s = weak_kernel_triviality_scan(f, scan, seed, t);
        Json j = {{"witness_found", s.witness_found}, {"sphere_samples", s.sphere_samples}, {"grid_points", s.grid_points}};
        if (s.witness_found) {
          j["x"] = to_json(s.x);
          j["w"] = to_json(s.w);
          j["source"] = s.source;
        } else {
          j["note"] = "no nonzero weak-kernel point found; the kernel is likely trivial (not a certificate)";
        }
        emit(j, out);
      }
    } else if (c_las->parsed()) {
      const MatrixFamily f = read_family(family_path);
      const Json pj = read_json(p_path);
      const Matrix p = matrix_from_json(pj.is_object() ? pj.at("P") : pj, "P");
      emit(to_json(lasalle_set_quadratic(f, p, t)), out);
    } else if (c_dual->parsed()) {
      emit(to_json(dual_family(read_family(family_path))), out);
    } else if (c_rate->parsed()) {
      const MatrixFamily f = read_family(family_path);
      AnalyzeOptions opt;
      opt.tol = t;
      opt.seed = seed;
      opt.threads = threads;
      const AnalysisReport rep = analyze(f, opt);
      if (!rep.rate) {
        throw PreconditionError(std::string("no strong certificate with a quadratic function (strong verdict: ") +
                                to_string(rep.strong.status) + ")");
      }
      Json j = to_json(*rep.rate);
      j["method"] = rep.strong.method;
      emit(j, out);
    } else if (c_ex->parsed()) {
      if (example_name.empty()) {
        emit(example_listing(), out);
      } else {
        emit(to_json(catalogue(example_name).family), out);
      }
    } else if (c_verify->parsed()) {
      const Json report = read_json(report_path);
      const MatrixFamily f = read_family(family_path);
      const VerifyResult r = verify_report(report, f);
      emit({{"pass", r.pass}, {"checked", r.checked}, {"failures", r.failures}}, out);
    }
  } catch (const NumericalError& e) {
    emit_error(to_string(e.kind()), e.what());
    return 2;
  } catch (const Error& e) {
    emit_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const Json::exception& e) {
    emit_error("input", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    emit_error("input", e.what());
    return 1;
  } catch (const std::out_of_range& e) {
    emit_error("input", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("numerical", e.what());
    return 2;
  }
  return 0;
}
